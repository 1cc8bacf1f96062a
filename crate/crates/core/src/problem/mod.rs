//! Slab problems: grid, coefficient fields, epsilon scaling and manufactured data.

mod coefficient;
pub mod config;
mod grid;
mod mms;
mod spec;

pub use coefficient::{integrate, CoefficientField, Profile};
pub use grid::Grid1D;
pub use mms::{
    mms_diffusion_source, mms_transport_source, mms_transport_source_at, AngularShape,
    ManufacturedCase, SpatialShape,
};
pub use spec::{CellData, Inflow, KernelSpec, ProblemSpec, ScaledProblem, Scaling};
