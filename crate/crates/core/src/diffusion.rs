//! The limit problem `-(A11 u')' + gamma u = f` on `(0, L)` with `u = 0` at both ends.
//!
//! Vertex-centred finite volumes on the transport edges. The coefficient of the
//! element between two nodes is the harmonic mean of `A11` over it, which keeps
//! second order across material jumps that sit on nodes. Reaction and load are
//! integrated against hat functions, so the scheme is the P1 Galerkin method
//! with a lumped reaction term and [`weak_residual`] vanishes on the discrete
//! solution.

use serde::Serialize;

use crate::problem::{integrate, Grid1D, ProblemSpec};
use crate::velocity::DiffusionTensor;
use crate::{Error, Result};

/// `A11` of the limit problem.
#[derive(Debug, Clone, PartialEq)]
pub enum LimitCoefficient {
    /// `A11(x) = factor / sigma(x)`; `factor = 1/3` for isotropic scattering.
    Factor(f64),
    /// One value per cell, e.g. from [`DiffusionTensor::a11`].
    PerCell(Vec<f64>),
}

impl From<&DiffusionTensor> for LimitCoefficient {
    fn from(t: &DiffusionTensor) -> Self {
        LimitCoefficient::PerCell(t.a11())
    }
}

impl LimitCoefficient {
    /// Element coefficients on the problem grid.
    pub fn cell_values(&self, problem: &ProblemSpec) -> Result<Vec<f64>> {
        let grid = problem.grid;
        let a: Vec<f64> = match self {
            LimitCoefficient::Factor(c) => (0..grid.n_cells())
                .map(|i| c / problem.sigma.average(grid.edge(i), grid.edge(i + 1)))
                .collect(),
            LimitCoefficient::PerCell(v) => {
                if v.len() != grid.n_cells() {
                    return Err(Error::Argument(format!(
                        "{} coefficient values for {} cells",
                        v.len(),
                        grid.n_cells()
                    )));
                }
                v.clone()
            }
        };
        if let Some(bad) = a.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::Certification(format!(
                "diffusion coefficient not coercive: {bad}"
            )));
        }
        Ok(a)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffusionSolution {
    pub grid: Grid1D,
    /// Node positions, the transport cell edges.
    pub nodes: Vec<f64>,
    /// Nodal values; zero at both ends.
    pub u0: Vec<f64>,
    /// `-A11 du0/dx` on each element, located at the transport cell centre.
    pub flux: Vec<f64>,
    /// `du0/dx` at each cell centre, recovered from the flux.
    pub gradient: Vec<f64>,
    /// Element coefficients.
    pub a11: Vec<f64>,
}

impl DiffusionSolution {
    /// Values at transport cell centres (mean of the two nodes).
    pub fn at_centers(&self) -> Vec<f64> {
        self.u0.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Piecewise-linear interpolant.
    pub fn value(&self, x: f64) -> f64 {
        let h = self.grid.h();
        let n = self.grid.n_cells();
        let k = ((x / h).floor().max(0.0) as usize).min(n - 1);
        let t = (x - self.nodes[k]) / h;
        (1.0 - t) * self.u0[k] + t * self.u0[k + 1]
    }
}

/// Thomas algorithm; `lower[i]` couples to `x[i-1]`, `upper[i]` to `x[i+1]`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let (l, prev_c, prev_d) = if i == 0 {
            (0.0, 0.0, 0.0)
        } else {
            (lower[i], c[i - 1], d[i - 1])
        };
        let m = diag[i] - l * prev_c;
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - l * prev_d) / m;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = d[i] - if i + 1 < n { c[i] * x[i + 1] } else { 0.0 };
    }
    x
}

/// Element coefficients, lumped reaction and load per node.
struct Assembly {
    h: f64,
    a: Vec<f64>,
    mass: Vec<f64>,
    load: Vec<f64>,
}

fn hat(nodes: &[f64], k: usize, h: f64) -> impl Fn(f64) -> f64 + '_ {
    move |x| (1.0 - (x - nodes[k]).abs() / h).max(0.0)
}

impl Assembly {
    fn new(
        problem: &ProblemSpec,
        coef: &LimitCoefficient,
        source: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<Self> {
        let grid = problem.grid;
        let h = grid.h();
        let nodes = grid.edges();
        let a = coef.cell_values(problem)?;
        let n = grid.n_cells();
        let mut mass = vec![0.0; n + 1];
        let mut load = vec![0.0; n + 1];
        for k in 1..n {
            let phi = hat(&nodes, k, h);
            let (l, r) = (nodes[k - 1], nodes[k + 1]);
            mass[k] = problem.gamma.weighted_integral(&phi, l, nodes[k])
                + problem.gamma.weighted_integral(&phi, nodes[k], r);
            load[k] = match source {
                Some(f) => {
                    integrate(|x| f(x) * phi(x), l, nodes[k])
                        + integrate(|x| f(x) * phi(x), nodes[k], r)
                }
                None => {
                    problem.source.weighted_integral(&phi, l, nodes[k])
                        + problem.source.weighted_integral(&phi, nodes[k], r)
                }
            };
        }
        Ok(Self { h, a, mass, load })
    }

    /// `B(u, phi_k) - (f, phi_k)` for the interior hats.
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let n = self.a.len();
        (1..n)
            .map(|k| {
                let left = self.a[k - 1] * (u[k] - u[k - 1]) / self.h;
                let right = self.a[k] * (u[k + 1] - u[k]) / self.h;
                left - right + self.mass[k] * u[k] - self.load[k]
            })
            .collect()
    }

    fn solve(&self) -> Vec<f64> {
        let n = self.a.len();
        let m = n - 1;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for r in 0..m {
            let k = r + 1;
            let (al, ar) = (self.a[k - 1] / self.h, self.a[k] / self.h);
            diag[r] = al + ar + self.mass[k];
            lower[r] = -al;
            upper[r] = -ar;
            rhs[r] = self.load[k];
        }
        let mut u = vec![0.0; n + 1];
        u[1..n].copy_from_slice(&solve_tridiagonal(&lower, &diag, &upper, &rhs));
        u
    }
}

/// Solve the limit problem with the problem's own (unscaled) coefficients and source.
pub fn solve_diffusion(
    problem: &ProblemSpec,
    coef: &LimitCoefficient,
) -> Result<DiffusionSolution> {
    solve_with(problem, coef, None)
}

/// Same, with the source replaced by `source`.
pub fn solve_diffusion_with_source(
    problem: &ProblemSpec,
    coef: &LimitCoefficient,
    source: &dyn Fn(f64) -> f64,
) -> Result<DiffusionSolution> {
    solve_with(problem, coef, Some(source))
}

fn solve_with(
    problem: &ProblemSpec,
    coef: &LimitCoefficient,
    source: Option<&dyn Fn(f64) -> f64>,
) -> Result<DiffusionSolution> {
    problem.validate()?;
    let grid = problem.grid;
    if grid.n_cells() < 2 {
        return Err(Error::Argument(
            "the limit problem needs at least two cells".into(),
        ));
    }
    let asm = Assembly::new(problem, coef, source)?;
    let u0 = asm.solve();
    let h = grid.h();
    let gradient: Vec<f64> = u0.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let flux: Vec<f64> = gradient.iter().zip(&asm.a).map(|(g, a)| -a * g).collect();
    // gradient from the flux, as consumed by the corrector
    let gradient = flux.iter().zip(&asm.a).map(|(q, a)| -q / a).collect();
    Ok(DiffusionSolution {
        grid,
        nodes: grid.edges(),
        u0,
        flux,
        gradient,
        a11: asm.a,
    })
}

/// `(A11 u', phi') + (gamma u, phi) - (f, phi)` for every interior hat `phi`.
///
/// `nodal` may be any vector of nodal values (including nonzero end values).
pub fn weak_residual(
    nodal: &[f64],
    problem: &ProblemSpec,
    coef: &LimitCoefficient,
) -> Result<Vec<f64>> {
    weak_residual_with(nodal, problem, coef, None)
}

pub fn weak_residual_with(
    nodal: &[f64],
    problem: &ProblemSpec,
    coef: &LimitCoefficient,
    source: Option<&dyn Fn(f64) -> f64>,
) -> Result<Vec<f64>> {
    if nodal.len() != problem.grid.n_cells() + 1 {
        return Err(Error::Argument(format!(
            "{} nodal values for {} cells",
            nodal.len(),
            problem.grid.n_cells()
        )));
    }
    Ok(Assembly::new(problem, coef, source)?.residual(nodal))
}

/// `(f/gamma) (1 - cosh(k (x - L/2)) / cosh(k L/2))`, `k = sqrt(gamma/a)`: constant coefficients.
pub fn cosh_reference(a: f64, gamma: f64, f: f64, length: f64) -> impl Fn(f64) -> f64 {
    let k = (gamma / a).sqrt();
    move |x| f / gamma * (1.0 - (k * (x - 0.5 * length)).cosh() / (k * 0.5 * length).cosh())
}
