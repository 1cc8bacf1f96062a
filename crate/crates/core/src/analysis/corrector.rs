use crate::diffusion::DiffusionSolution;
use crate::transport::slab_quadrature;
use crate::velocity::{pinv_apply, ScatteringOperator};
use crate::{Error, PhaseField, Result};

/// `u1 = -(1/sigma) (I - K)^+ mu du0/dx` per cell, from the recovered gradient.
///
/// `sigma` holds the unscaled cell values.
pub fn corrector_u1(
    diffusion: &DiffusionSolution,
    sigma: &[f64],
    op: &ScatteringOperator,
) -> Result<PhaseField> {
    let quad = slab_quadrature(op)?;
    let n = diffusion.gradient.len();
    if sigma.len() != n {
        return Err(Error::Argument(format!(
            "{} sigma values for {n} cells",
            sigma.len()
        )));
    }
    // linear in the gradient, so one pseudoinverse application suffices
    let chi = pinv_apply(op, quad.nodes())?;
    Ok(PhaseField::from_fn(n, quad.len(), |i, j| {
        -diffusion.gradient[i] / sigma[i] * chi[j]
    }))
}

/// `psi = u_eps - u0 - eps u1`, with `u0` given at cell centres.
pub fn remainder(u_eps: &PhaseField, u0: &[f64], u1: &PhaseField, eps: f64) -> Result<PhaseField> {
    if u_eps.shape() != u1.shape() || u0.len() != u_eps.nrows() {
        return Err(Error::Argument(format!(
            "remainder shapes: u_eps {:?}, u1 {:?}, u0 {}",
            u_eps.shape(),
            u1.shape(),
            u0.len()
        )));
    }
    Ok(PhaseField::from_fn(u_eps.nrows(), u_eps.ncols(), |i, j| {
        u_eps[(i, j)] - u0[i] - eps * u1[(i, j)]
    }))
}
