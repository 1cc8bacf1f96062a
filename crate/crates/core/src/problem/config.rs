//! TOML run configuration.
//!
//! ```toml
//! [grid]
//! length = 1.0
//! cells = 128
//!
//! [coefficients.sigma]
//! kind = "smooth"
//! mean = 1.0
//! amplitude = 0.5
//! frequency = 1.0
//!
//! [coefficients.gamma]
//! kind = "constant"
//! value = 1.0
//!
//! [source]
//! kind = "constant"
//! value = 1.0
//!
//! [scattering]
//! kernel = "isotropic"
//! ordinates = 16
//!
//! [study]
//! eps = [0.5, 0.25, 0.125, 0.0625]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{
    CoefficientField, Grid1D, Inflow, KernelSpec, ManufacturedCase, ProblemSpec, Profile, Scaling,
};
use crate::transport::SolverOptions;
use crate::velocity::{AngularQuadrature, SphereQuadrature};
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: GridSection,
    pub coefficients: CoefficientSection,
    pub source: FieldSection,
    #[serde(default)]
    pub boundary: BoundarySection,
    #[serde(default)]
    pub scattering: ScatteringSection,
    #[serde(default)]
    pub solver: SolverOptions,
    pub study: Option<StudySection>,
    pub manufactured: Option<ManufacturedSection>,
    #[serde(default = "default_scaling")]
    pub scaling: Scaling,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_scaling() -> Scaling {
    Scaling::Diffusive
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "one")]
    pub length: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
}

fn one() -> f64 {
    1.0
}

fn default_cells() -> usize {
    128
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientSection {
    pub sigma: FieldSection,
    pub gamma: FieldSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FieldSection {
    Constant {
        value: f64,
    },
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Smooth {
        mean: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl FieldSection {
    pub fn to_field(&self) -> Result<CoefficientField> {
        CoefficientField::new(match self.clone() {
            FieldSection::Constant { value } => Profile::Constant { value },
            FieldSection::Piecewise {
                breakpoints,
                values,
            } => Profile::Piecewise {
                breakpoints,
                values,
            },
            FieldSection::Smooth {
                mean,
                amplitude,
                frequency,
                phase,
            } => Profile::Sine {
                mean,
                amplitude,
                frequency,
                phase,
            },
        })
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    #[serde(default)]
    pub left: f64,
    #[serde(default)]
    pub right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    #[default]
    Isotropic,
    Linear,
    Table,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringSection {
    #[serde(default)]
    pub kernel: KernelKind,
    pub g_factor: Option<f64>,
    pub table: Option<PathBuf>,
    #[serde(default = "default_ordinates")]
    pub ordinates: usize,
    #[serde(default = "default_polar")]
    pub polar: usize,
    #[serde(default = "default_azimuth")]
    pub azimuth: usize,
}

fn default_ordinates() -> usize {
    16
}

fn default_polar() -> usize {
    8
}

fn default_azimuth() -> usize {
    16
}

impl Default for ScatteringSection {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Isotropic,
            g_factor: None,
            table: None,
            ordinates: default_ordinates(),
            polar: default_polar(),
            azimuth: default_azimuth(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub eps: Option<Vec<f64>>,
    pub eps_max: Option<f64>,
    pub ratio: Option<f64>,
    pub count: Option<usize>,
    /// Add the L1 and L4 error columns.
    #[serde(default = "yes")]
    pub lp: bool,
    #[serde(default = "default_min_cells")]
    pub min_cells: usize,
    /// Cells per mean free path: `h <= eps / cells_per_eps`.
    #[serde(default = "default_cells_per_eps")]
    pub cells_per_eps: f64,
}

fn yes() -> bool {
    true
}

fn default_min_cells() -> usize {
    64
}

fn default_cells_per_eps() -> f64 {
    4.0
}

impl StudySection {
    /// Explicit list, or `eps_max * ratio^k` for `k < count`.
    pub fn eps_list(&self) -> Result<Vec<f64>> {
        match (&self.eps, self.eps_max, self.ratio, self.count) {
            (Some(list), None, None, None) => Ok(list.clone()),
            (None, Some(max), Some(ratio), Some(count)) => {
                Ok((0..count).map(|k| max * ratio.powi(k as i32)).collect())
            }
            _ => Err(Error::Config(
                "[study] needs either `eps = [...]` or all of eps_max, ratio, count".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedSection {
    /// A manufactured case name, or `constant-coefficient` for the closed-form diffusion check.
    pub case: String,
}

impl Config {
    /// Parse TOML text; relative table paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, dir)
    }

    fn check(&self) -> Result<()> {
        match self.scattering.kernel {
            KernelKind::Linear if self.scattering.g_factor.is_none() => {
                return Err(Error::Config("kernel = \"linear\" needs g_factor".into()));
            }
            KernelKind::Table if self.scattering.table.is_none() => {
                return Err(Error::Config(
                    "kernel = \"table\" needs a table path".into(),
                ));
            }
            _ => {}
        }
        if let Some(m) = &self.manufactured {
            if m.case != "constant-coefficient" {
                ManufacturedCase::by_name(&m.case)?;
            }
        }
        self.solver.validate()
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        match self.scattering.kernel {
            KernelKind::Isotropic => KernelSpec::Isotropic,
            KernelKind::Linear => KernelSpec::Linear {
                g_factor: self.scattering.g_factor.unwrap_or(0.0),
            },
            KernelKind::Table => {
                let p = self.scattering.table.clone().unwrap_or_default();
                KernelSpec::Table {
                    path: if p.is_absolute() {
                        p
                    } else {
                        self.base_dir.join(p)
                    },
                }
            }
        }
    }

    /// The base problem on the configured grid.
    pub fn problem(&self) -> Result<ProblemSpec> {
        let grid = Grid1D::new(self.grid.length, self.grid.cells)?;
        let mut p = ProblemSpec::new(
            grid,
            self.coefficients.sigma.to_field()?,
            self.coefficients.gamma.to_field()?,
            self.source.to_field()?,
        )
        .with_boundary(Inflow {
            left: self.boundary.left,
            right: self.boundary.right,
        })
        .with_kernel(self.kernel_spec());
        p.scaling = self.scaling;
        p.validate()?;
        Ok(p)
    }

    pub fn quadrature(&self) -> Result<AngularQuadrature> {
        AngularQuadrature::gauss(self.scattering.ordinates)
    }

    pub fn sphere_quadrature(&self) -> Result<SphereQuadrature> {
        SphereQuadrature::product(self.scattering.polar, self.scattering.azimuth)
    }

    pub fn manufactured_case(&self) -> Option<&str> {
        self.manufactured.as_ref().map(|m| m.case.as_str())
    }
}
