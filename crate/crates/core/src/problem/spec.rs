use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::coefficient::CoefficientField;
use super::grid::Grid1D;
use crate::velocity::{AngularQuadrature, Kernel};
use crate::{Error, Result};

/// Isotropic inflow values `g` on the two faces of the slab.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Inflow {
    /// Entering at `x = 0` (directions with `mu > 0`).
    pub left: f64,
    /// Entering at `x = L` (directions with `mu < 0`).
    pub right: f64,
}

impl Inflow {
    /// `||g||_{L2(inflow; |mu|)}` on a slab quadrature.
    pub fn weighted_norm(&self, quad: &AngularQuadrature) -> f64 {
        quad.nodes()
            .iter()
            .zip(quad.weights())
            .map(|(mu, w)| {
                let g = if *mu > 0.0 { self.left } else { self.right };
                mu.abs() * w * g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.left == 0.0 && self.right == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kernel", rename_all = "lowercase")]
pub enum KernelSpec {
    Isotropic,
    Linear {
        g_factor: f64,
    },
    /// Tabulated on the slab ordinates.
    Table {
        path: PathBuf,
    },
}

impl KernelSpec {
    pub fn to_kernel(&self) -> Result<Kernel> {
        Ok(match self {
            KernelSpec::Isotropic => Kernel::Isotropic,
            KernelSpec::Linear { g_factor } => Kernel::Linear { g: *g_factor },
            KernelSpec::Table { path } => Kernel::read_table(path)?,
        })
    }

    /// Whether the kernel is defined on the sphere, so the full 3x3 tensor exists.
    pub fn has_sphere_form(&self) -> bool {
        !matches!(self, KernelSpec::Table { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scaling {
    /// `gamma_eps = eps gamma`, `sigma_eps = sigma / eps`, `f_eps = eps f`, `g_eps = eps g`.
    Diffusive,
    /// Coefficients used verbatim for every eps.
    Unscaled,
}

/// Coefficients, data and domain of one slab problem.
#[derive(Debug, Clone, Serialize)]
pub struct ProblemSpec {
    pub grid: Grid1D,
    pub sigma: CoefficientField,
    pub gamma: CoefficientField,
    pub source: CoefficientField,
    pub boundary: Inflow,
    pub scattering: KernelSpec,
    pub scaling: Scaling,
}

impl ProblemSpec {
    pub fn new(
        grid: Grid1D,
        sigma: CoefficientField,
        gamma: CoefficientField,
        source: CoefficientField,
    ) -> Self {
        Self {
            grid,
            sigma,
            gamma,
            source,
            boundary: Inflow::default(),
            scattering: KernelSpec::Isotropic,
            scaling: Scaling::Diffusive,
        }
    }

    pub fn with_kernel(mut self, scattering: KernelSpec) -> Self {
        self.scattering = scattering;
        self
    }

    pub fn with_boundary(mut self, boundary: Inflow) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_grid(mut self, grid: Grid1D) -> Self {
        self.grid = grid;
        self
    }

    /// Positivity of sigma and gamma and finiteness of the data.
    pub fn validate(&self) -> Result<()> {
        self.sigma.require_positive("sigma")?;
        self.gamma.require_positive("gamma")?;
        let (lo, hi) = self.source.bounds();
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Validation("source must be bounded".into()));
        }
        if !self.boundary.left.is_finite() || !self.boundary.right.is_finite() {
            return Err(Error::Validation("inflow data must be finite".into()));
        }
        Ok(())
    }

    pub fn scale(&self, eps: f64) -> Result<ScaledProblem<'_>> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Argument(format!("eps must be positive, got {eps}")));
        }
        Ok(ScaledProblem { base: self, eps })
    }
}

/// Evaluable views of the eps-scaled coefficients of a problem.
#[derive(Debug, Clone, Copy)]
pub struct ScaledProblem<'a> {
    base: &'a ProblemSpec,
    eps: f64,
}

impl<'a> ScaledProblem<'a> {
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn base(&self) -> &'a ProblemSpec {
        self.base
    }

    pub fn grid(&self) -> &Grid1D {
        &self.base.grid
    }

    fn factors(&self) -> (f64, f64, f64, f64) {
        match self.base.scaling {
            Scaling::Diffusive => (self.eps, 1.0 / self.eps, self.eps, self.eps),
            Scaling::Unscaled => (1.0, 1.0, 1.0, 1.0),
        }
    }

    pub fn gamma(&self, x: f64) -> f64 {
        self.factors().0 * self.base.gamma.value(x)
    }

    pub fn sigma(&self, x: f64) -> f64 {
        self.factors().1 * self.base.sigma.value(x)
    }

    pub fn source(&self, x: f64) -> f64 {
        self.factors().2 * self.base.source.value(x)
    }

    pub fn inflow(&self) -> Inflow {
        let s = self.factors().3;
        Inflow {
            left: s * self.base.boundary.left,
            right: s * self.base.boundary.right,
        }
    }

    /// Cell averages of the scaled gamma, sigma and source on the problem grid.
    pub fn cell_data(&self) -> CellData {
        let grid = self.base.grid;
        let (fg, fs, ff, _) = self.factors();
        let avg = |c: &CoefficientField| -> Vec<f64> {
            (0..grid.n_cells())
                .map(|i| c.average(grid.edge(i), grid.edge(i + 1)))
                .collect()
        };
        CellData {
            gamma: avg(&self.base.gamma).into_iter().map(|v| fg * v).collect(),
            sigma: avg(&self.base.sigma).into_iter().map(|v| fs * v).collect(),
            source: avg(&self.base.source).into_iter().map(|v| ff * v).collect(),
        }
    }

    /// The scaled coefficients as a new base problem (same scaling convention).
    pub fn materialize(&self) -> ProblemSpec {
        let (fg, fs, ff, fb) = self.factors();
        ProblemSpec {
            grid: self.base.grid,
            sigma: self.base.sigma.scaled(fs),
            gamma: self.base.gamma.scaled(fg),
            source: self.base.source.scaled(ff),
            boundary: Inflow {
                left: fb * self.base.boundary.left,
                right: fb * self.base.boundary.right,
            },
            scattering: self.base.scattering.clone(),
            scaling: self.base.scaling,
        }
    }
}

/// Per-cell scaled coefficients consumed by the transport solver.
#[derive(Debug, Clone, PartialEq)]
pub struct CellData {
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Isotropic source per cell.
    pub source: Vec<f64>,
}
