//! Norms, corrector and remainder, a-priori ratio tables and epsilon sweeps.

mod apriori;
mod corrector;
mod fit;
mod norms;
mod study;

pub use apriori::{apriori_check, apriori_row, AprioriRow, AprioriTable, GROWTH_LIMIT};
pub use corrector::{corrector_u1, remainder};
pub use fit::{fit_loglog, LogLogFit};
pub use norms::{
    boundary_norm, broadcast, ceps_inv_norm_sq, ceps_norm_sq, equivalence_windows, l2_norm,
    lp_norm, norms, scalar_l2, split, velocity_average, NormContext, NormSet, Splitting,
};
pub use study::{
    cells_for, convergence_study, validate_eps_list, ConvergenceReport, EpsRecord, SlopeEntry,
    StudyOptions, LOW_REGULARITY_NOTE,
};
