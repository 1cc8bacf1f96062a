//! Stationary mono-kinetic transport in the diffusive scaling and its diffusion limit.
//!
//! The crate is organised along the pipeline it supports:
//!
//! - [`velocity`]: velocity quadratures, scattering operators, assumption
//!   certification, the pseudoinverse of `I - K` and the diffusion tensor.
//! - [`problem`]: slab grid, coefficient fields, epsilon scaling, manufactured
//!   solutions and the configuration file.
//! - [`transport`]: discrete-ordinates sweeps with source iteration and
//!   diffusion synthetic acceleration.
//! - [`diffusion`]: the limit problem with homogeneous Dirichlet data.
//! - [`analysis`]: norms, corrector and remainder, a-priori ratio tables and
//!   epsilon-sweep convergence studies.

pub mod analysis;
pub mod diffusion;
mod error;
pub mod output;
pub mod problem;
pub mod transport;
pub mod velocity;

pub use error::{Error, Result};

/// Values over `cells x ordinates`: row `i` is cell `i`, column `j` is ordinate `j`.
pub type PhaseField = nalgebra::DMatrix<f64>;
