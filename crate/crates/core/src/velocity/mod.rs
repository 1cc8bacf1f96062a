//! Velocity space: quadratures, scattering operators, certification and the diffusion tensor.

mod quadrature;
mod scattering;
mod tensor;

pub use quadrature::{gauss_legendre, AngularQuadrature, SphereQuadrature, VelocitySet};
pub use scattering::{
    apply_k, apply_k_field, assemble_scattering, certify_assumptions, pinv_apply, AssumptionFlags,
    CertReport, Kernel, ScatteringOperator, NORMALIZATION_WARN, NULL_SPACE_CUTOFF,
    SELF_ADJOINT_TOL, SOLVABILITY_TOL, SPECTRUM_TOL,
};
pub(crate) use scattering::{shifted_solve, weighted_inner};
pub use tensor::{
    diffusion_tensor, slab_diffusion_factor, velocity_moment_tensor, DiffusionTensor,
};
