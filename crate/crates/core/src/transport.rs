//! Discrete-ordinates transport in slab geometry.
//!
//! Each source iteration inverts `mu d/dx + (gamma + sigma)` ordinate by ordinate
//! (a sweep) with the scattering source lagged. In the diffusive scaling the
//! unaccelerated spectral radius is `1 - O(eps^2)`; after every sweep a diffusion
//! correction for the change in the velocity average removes that slow mode.

use serde::{Deserialize, Serialize};

use crate::diffusion::solve_tridiagonal;
use crate::problem::{Grid1D, Inflow, ProblemSpec, ScaledProblem};
use crate::velocity::{
    apply_k_field, assemble_scattering, shifted_solve, AngularQuadrature, ScatteringOperator,
    VelocitySet,
};
use crate::{Error, PhaseField, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Cell value is the mean of the two edge values.
    #[default]
    #[serde(alias = "diamond")]
    DiamondDifference,
    /// Step closure: cell value equals the outgoing edge value. First order.
    #[serde(alias = "step")]
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Acceleration {
    #[default]
    Dsa,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub scheme: Scheme,
    /// Relative l2 change of the velocity average between iterates.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub acceleration: Acceleration,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::DiamondDifference,
            tolerance: 1e-10,
            max_iterations: 20_000,
            acceleration: Acceleration::Dsa,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Validation(format!(
                "solver tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Validation(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IterationLog {
    pub residuals: Vec<f64>,
    pub spectral_radius_estimate: f64,
    pub iterations: usize,
}

/// Converged angular flux with the data needed for norms and balance checks.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub eps: f64,
    pub grid: Grid1D,
    pub mus: Vec<f64>,
    pub weights: Vec<f64>,
    /// Cell-average angular flux, `cells x ordinates`.
    pub u: PhaseField,
    /// Edge values, `(cells + 1) x ordinates`.
    pub edges: PhaseField,
    /// Velocity average per cell.
    pub u_bar: Vec<f64>,
    pub log: IterationLog,
    /// Relative particle-balance defect of the returned iterate.
    pub balance_residual: f64,
    /// Cells x ordinates with a negative cell value (reported, not repaired).
    pub negative_entries: usize,
    pub inflow: Inflow,
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
    pub source: PhaseField,
}

/// Everything a solve needs, already scaled and cell-averaged.
#[derive(Debug, Clone)]
pub struct TransportSetup<'a> {
    pub grid: Grid1D,
    pub op: &'a ScatteringOperator,
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Cell-averaged source per ordinate.
    pub source: PhaseField,
    pub inflow: Inflow,
    pub eps: f64,
}

impl<'a> TransportSetup<'a> {
    /// Isotropic source `f_eps` from a scaled problem.
    pub fn from_scaled(scaled: &ScaledProblem<'_>, op: &'a ScatteringOperator) -> Self {
        let cells = scaled.cell_data();
        let n = op.len();
        let source = PhaseField::from_fn(cells.source.len(), n, |i, _| cells.source[i]);
        Self {
            grid: *scaled.grid(),
            op,
            gamma: cells.gamma,
            sigma: cells.sigma,
            source,
            inflow: scaled.inflow(),
            eps: scaled.eps(),
        }
    }

    pub fn with_source(mut self, source: PhaseField) -> Self {
        self.source = source;
        self
    }
}

pub(crate) fn slab_quadrature(op: &ScatteringOperator) -> Result<&AngularQuadrature> {
    match op.quadrature() {
        VelocitySet::Slab(q) => Ok(q),
        VelocitySet::Sphere(_) => Err(Error::Argument(
            "slab transport needs a slab quadrature".into(),
        )),
    }
}

/// Certified slab scattering operator for a problem's kernel.
pub fn slab_operator(
    problem: &ProblemSpec,
    quad: &AngularQuadrature,
) -> Result<ScatteringOperator> {
    let kernel = problem.scattering.to_kernel()?;
    assemble_scattering(&kernel, quad.clone())?.certified()
}

/// One transport sweep for a given emission density.
///
/// Returns `(cell values, edge values)`. Positive ordinates march from `x = 0`,
/// negative ones from `x = L`.
pub fn sweep(
    total: &[f64],
    emission: &PhaseField,
    inflow: Inflow,
    grid: &Grid1D,
    quad: &AngularQuadrature,
    scheme: Scheme,
) -> Result<(PhaseField, PhaseField)> {
    let nc = grid.n_cells();
    let no = quad.len();
    if emission.nrows() != nc || emission.ncols() != no || total.len() != nc {
        return Err(Error::Argument(format!(
            "sweep shapes: emission {}x{}, total {}, grid {nc} x {no}",
            emission.nrows(),
            emission.ncols(),
            total.len()
        )));
    }
    let h = grid.h();
    let mut cell = PhaseField::zeros(nc, no);
    let mut edge = PhaseField::zeros(nc + 1, no);
    for (j, &mu) in quad.nodes().iter().enumerate() {
        if mu == 0.0 {
            return Err(Error::Validation("ordinate mu = 0 cannot be swept".into()));
        }
        let a = mu.abs() / h;
        let (start, g) = if mu > 0.0 {
            (0, inflow.left)
        } else {
            (nc, inflow.right)
        };
        edge[(start, j)] = g;
        let mut incoming = g;
        for step in 0..nc {
            let i = if mu > 0.0 { step } else { nc - 1 - step };
            let q = emission[(i, j)];
            let st = total[i];
            let (outgoing, avg) = match scheme {
                Scheme::DiamondDifference => {
                    let out = (q + (a - 0.5 * st) * incoming) / (a + 0.5 * st);
                    (out, 0.5 * (incoming + out))
                }
                Scheme::Upwind => {
                    let out = (q + a * incoming) / (a + st);
                    (out, out)
                }
            };
            let out_edge = if mu > 0.0 { i + 1 } else { i };
            edge[(out_edge, j)] = outgoing;
            cell[(i, j)] = avg;
            incoming = outgoing;
        }
    }
    Ok((cell, edge))
}

pub(crate) fn velocity_average(field: &PhaseField, w: &[f64]) -> Vec<f64> {
    (0..field.nrows())
        .map(|i| field.row(i).iter().zip(w).map(|(u, w)| u * w).sum())
        .collect()
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Diffusion correction for the velocity-average change `residual` (per cell),
/// with Marshak vacuum conditions.
fn dsa_correction(diff: &[f64], absorption: &[f64], residual: &[f64], h: f64) -> Vec<f64> {
    let n = diff.len();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let rhs: Vec<f64> = residual.iter().map(|r| h * r).collect();
    for i in 0..n {
        diag[i] = absorption[i] * h;
        if i > 0 {
            let k = 2.0 * diff[i] * diff[i - 1] / (diff[i] + diff[i - 1]) / h;
            diag[i] += k;
            lower[i] = -k;
        } else {
            diag[i] += 1.0 / (2.0 + h / (2.0 * diff[i]));
        }
        if i + 1 < n {
            let k = 2.0 * diff[i] * diff[i + 1] / (diff[i] + diff[i + 1]) / h;
            diag[i] += k;
            upper[i] = -k;
        } else {
            diag[i] += 1.0 / (2.0 + h / (2.0 * diff[i]));
        }
    }
    solve_tridiagonal(&lower, &diag, &upper, &rhs)
}

/// `|outflow - inflow + absorption - source|`, relative to the data.
pub fn particle_balance(
    edges: &PhaseField,
    u_bar: &[f64],
    gamma: &[f64],
    source: &PhaseField,
    inflow: Inflow,
    grid: &Grid1D,
    quad: &AngularQuadrature,
) -> f64 {
    let nc = grid.n_cells();
    let h = grid.h();
    let (mut outflow, mut incoming) = (0.0, 0.0);
    for (j, (&mu, &w)) in quad.nodes().iter().zip(quad.weights()).enumerate() {
        if mu > 0.0 {
            outflow += mu * w * edges[(nc, j)];
            incoming += mu * w * inflow.left;
        } else {
            outflow += -mu * w * edges[(0, j)];
            incoming += -mu * w * inflow.right;
        }
    }
    let absorption: f64 = (0..nc).map(|i| h * gamma[i] * u_bar[i]).sum();
    let src: f64 = velocity_average(source, quad.weights())
        .iter()
        .map(|f| h * f)
        .sum();
    let defect = outflow - incoming + absorption - src;
    let scale = (src.abs() + incoming.abs()).max(outflow.abs() + absorption.abs());
    if scale == 0.0 {
        defect.abs()
    } else {
        defect.abs() / scale
    }
}

/// Source iteration (optionally accelerated) to the fixed point.
pub fn solve(setup: &TransportSetup<'_>, options: &SolverOptions) -> Result<TransportSolution> {
    options.validate()?;
    let quad = slab_quadrature(setup.op)?;
    let grid = setup.grid;
    let nc = grid.n_cells();
    let no = quad.len();
    let w = quad.weights();
    if setup.gamma.len() != nc || setup.sigma.len() != nc || setup.source.shape() != (nc, no) {
        return Err(Error::Argument(
            "transport setup does not match the grid and quadrature".into(),
        ));
    }
    let total: Vec<f64> = setup
        .gamma
        .iter()
        .zip(&setup.sigma)
        .map(|(g, s)| g + s)
        .collect();
    let diff: Vec<f64> = if options.acceleration == Acceleration::Dsa {
        (0..nc)
            .map(|i| {
                let x = shifted_solve(setup.op, setup.gamma[i], setup.sigma[i], quad.nodes())?;
                Ok(quad
                    .nodes()
                    .iter()
                    .zip(&x)
                    .zip(w)
                    .map(|((m, x), w)| w * m * x)
                    .sum())
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut u = PhaseField::zeros(nc, no);
    let mut residuals = Vec::new();
    let mut settled = 0usize;
    for it in 1..=options.max_iterations {
        let mut emission = apply_k_field(setup.op, &u)?;
        for i in 0..nc {
            for j in 0..no {
                emission[(i, j)] = setup.sigma[i] * emission[(i, j)] + setup.source[(i, j)];
            }
        }
        let (half, edges) = sweep(&total, &emission, setup.inflow, &grid, quad, options.scheme)?;
        let phi_old = velocity_average(&u, w);
        let phi_half = velocity_average(&half, w);
        u = half.clone();
        if options.acceleration == Acceleration::Dsa {
            let r: Vec<f64> = (0..nc)
                .map(|i| setup.sigma[i] * (phi_half[i] - phi_old[i]))
                .collect();
            let corr = dsa_correction(&diff, &setup.gamma, &r, grid.h());
            for i in 0..nc {
                for j in 0..no {
                    u[(i, j)] += corr[i];
                }
            }
        }
        let phi_new = velocity_average(&u, w);
        let delta: Vec<f64> = phi_new.iter().zip(&phi_old).map(|(a, b)| a - b).collect();
        let norm = l2(&phi_new);
        let change = if norm == 0.0 {
            l2(&delta)
        } else {
            l2(&delta) / norm
        };
        residuals.push(change);

        if change <= options.tolerance {
            settled += 1;
            let balance = particle_balance(
                &edges,
                &phi_half,
                &setup.gamma,
                &setup.source,
                setup.inflow,
                &grid,
                quad,
            );
            // keep iterating while the balance defect still improves
            if balance <= options.tolerance || settled >= 10 || it == options.max_iterations {
                let spectral_radius_estimate = spectral_radius(&residuals);
                let negative_entries = half.iter().filter(|v| **v < 0.0).count();
                return Ok(TransportSolution {
                    eps: setup.eps,
                    grid,
                    mus: quad.nodes().to_vec(),
                    weights: w.to_vec(),
                    u: half,
                    edges,
                    u_bar: phi_half,
                    log: IterationLog {
                        iterations: it,
                        residuals,
                        spectral_radius_estimate,
                    },
                    balance_residual: balance,
                    negative_entries,
                    inflow: setup.inflow,
                    gamma: setup.gamma.clone(),
                    sigma: setup.sigma.clone(),
                    source: setup.source.clone(),
                });
            }
        } else {
            settled = 0;
        }
    }
    Err(Error::Convergence {
        iterations: options.max_iterations,
        residuals,
    })
}

/// Geometric mean of the last few residual ratios.
fn spectral_radius(res: &[f64]) -> f64 {
    let ratios: Vec<f64> = res
        .windows(2)
        .rev()
        .take(5)
        .filter(|w| w[0] > 0.0 && w[1] > 0.0)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    if ratios.is_empty() {
        0.0
    } else {
        (ratios.iter().sum::<f64>() / ratios.len() as f64).exp()
    }
}

/// Solve the eps-scaled problem with its own (isotropic) source and inflow data.
pub fn solve_transport(
    problem: &ProblemSpec,
    eps: f64,
    quad: &AngularQuadrature,
    options: &SolverOptions,
) -> Result<TransportSolution> {
    problem.validate()?;
    let op = slab_operator(problem, quad)?;
    solve_transport_with_operator(problem, eps, &op, options)
}

pub fn solve_transport_with_operator(
    problem: &ProblemSpec,
    eps: f64,
    op: &ScatteringOperator,
    options: &SolverOptions,
) -> Result<TransportSolution> {
    let scaled = problem.scale(eps)?;
    solve(&TransportSetup::from_scaled(&scaled, op), options)
}

/// `mu (u_right - u_left) / h` per cell and ordinate.
pub fn directional_derivative(sol: &TransportSolution) -> PhaseField {
    let h = sol.grid.h();
    PhaseField::from_fn(sol.u.nrows(), sol.u.ncols(), |i, j| {
        sol.mus[j] * (sol.edges[(i + 1, j)] - sol.edges[(i, j)]) / h
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    /// `0.0` or `L`.
    pub x: f64,
    pub mu: f64,
    /// `|mu| w`.
    pub weight: f64,
    pub value: f64,
}

/// Values on the outflow boundary: `x = 0` for `mu < 0`, `x = L` for `mu > 0`.
pub fn outflow_trace(sol: &TransportSolution) -> Vec<TracePoint> {
    let nc = sol.grid.n_cells();
    sol.mus
        .iter()
        .zip(&sol.weights)
        .enumerate()
        .map(|(j, (&mu, &w))| {
            let (x, row) = if mu > 0.0 {
                (sol.grid.length(), nc)
            } else {
                (0.0, 0)
            };
            TracePoint {
                x,
                mu,
                weight: mu.abs() * w,
                value: sol.edges[(row, j)],
            }
        })
        .collect()
}

impl TransportSolution {
    /// One more sweep from the returned iterate; relative l2 change of the cell values.
    pub fn fixed_point_residual(&self, op: &ScatteringOperator, scheme: Scheme) -> Result<f64> {
        let quad = slab_quadrature(op)?;
        let nc = self.grid.n_cells();
        let mut emission = apply_k_field(op, &self.u)?;
        for i in 0..nc {
            for j in 0..quad.len() {
                emission[(i, j)] = self.sigma[i] * emission[(i, j)] + self.source[(i, j)];
            }
        }
        let total: Vec<f64> = self
            .gamma
            .iter()
            .zip(&self.sigma)
            .map(|(g, s)| g + s)
            .collect();
        let (next, _) = sweep(&total, &emission, self.inflow, &self.grid, quad, scheme)?;
        let num = (&next - &self.u).norm();
        let den = self.u.norm();
        Ok(if den == 0.0 { num } else { num / den })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::CoefficientField;
    use crate::velocity::Kernel;

    fn quad(n: usize) -> AngularQuadrature {
        AngularQuadrature::gauss(n).unwrap()
    }

    #[test]
    fn pure_absorber_matches_exponential() {
        let q = quad(4);
        let big = 2.0;
        let mut errs = Vec::new();
        for n in [20usize, 40, 80] {
            let grid = Grid1D::new(1.0, n).unwrap();
            let total = vec![big; n];
            let emission = PhaseField::zeros(n, 4);
            let (_, edges) = sweep(
                &total,
                &emission,
                Inflow {
                    left: 1.0,
                    right: 0.0,
                },
                &grid,
                &q,
                Scheme::DiamondDifference,
            )
            .unwrap();
            let mut e = 0.0f64;
            for (j, &mu) in q.nodes().iter().enumerate() {
                if mu <= 0.0 {
                    continue;
                }
                for k in 0..=n {
                    let exact = (-big * grid.edge(k) / mu).exp();
                    e = e.max((edges[(k, j)] - exact).abs());
                }
            }
            errs.push(e);
        }
        assert!(errs[0] < 5e-2);
        let order = (errs[1] / errs[2]).log2();
        assert!(order > 1.8, "order {order}, errs {errs:?}");
    }

    #[test]
    fn zero_data_zero_flux() {
        let q = quad(4);
        let grid = Grid1D::new(1.0, 10).unwrap();
        let (c, e) = sweep(
            &[1.0; 10],
            &PhaseField::zeros(10, 4),
            Inflow::default(),
            &grid,
            &q,
            Scheme::DiamondDifference,
        )
        .unwrap();
        assert!(c.iter().chain(e.iter()).all(|v| *v == 0.0));
    }

    #[test]
    fn uniform_source_relaxes_to_constant() {
        let q = quad(4);
        let n = 400;
        let grid = Grid1D::new(20.0, n).unwrap();
        let big = 1.5;
        let c = 0.7;
        let emission = PhaseField::from_element(n, 4, big * c);
        let (_, edges) = sweep(
            &vec![big; n],
            &emission,
            Inflow::default(),
            &grid,
            &q,
            Scheme::DiamondDifference,
        )
        .unwrap();
        for (j, &mu) in q.nodes().iter().enumerate() {
            if mu < 0.0 {
                continue;
            }
            for k in [10usize, 100, 400] {
                let x = grid.edge(k);
                let exact = c * (1.0 - (-big * x / mu).exp());
                assert!((edges[(k, j)] - exact).abs() < 2e-3);
            }
        }
    }

    #[test]
    fn sweep_rejects_bad_shapes() {
        let q = quad(2);
        let grid = Grid1D::new(1.0, 3).unwrap();
        assert!(sweep(
            &[1.0; 2],
            &PhaseField::zeros(3, 2),
            Inflow::default(),
            &grid,
            &q,
            Scheme::Upwind
        )
        .is_err());
    }

    fn unit_problem() -> ProblemSpec {
        ProblemSpec::new(
            Grid1D::new(1.0, 100).unwrap(),
            CoefficientField::constant(1.0),
            CoefficientField::constant(1.0),
            CoefficientField::constant(1.0),
        )
    }

    #[test]
    fn converges_with_balance() {
        let p = unit_problem();
        for acceleration in [Acceleration::Dsa, Acceleration::None] {
            let opts = SolverOptions {
                acceleration,
                ..Default::default()
            };
            let sol = solve_transport(&p, 1.0, &quad(8), &opts).unwrap();
            assert!(sol.balance_residual <= 1e-10, "{}", sol.balance_residual);
            for i in 0..sol.u.nrows() {
                let avg: f64 = sol
                    .u
                    .row(i)
                    .iter()
                    .zip(&sol.weights)
                    .map(|(u, w)| u * w)
                    .sum();
                assert_eq!(avg, sol.u_bar[i]);
            }
        }
    }

    #[test]
    fn fixed_point_residual_small() {
        let p = unit_problem();
        let q = quad(8);
        let op = slab_operator(&p, &q).unwrap();
        let opts = SolverOptions::default();
        let sol = solve_transport_with_operator(&p, 0.25, &op, &opts).unwrap();
        assert!(sol.fixed_point_residual(&op, opts.scheme).unwrap() <= opts.tolerance);
    }

    #[test]
    fn dsa_needed_in_diffusive_regime() {
        let p = unit_problem().with_grid(Grid1D::new(1.0, 256).unwrap());
        let q = quad(8);
        let eps = 2f64.powi(-6);
        let dsa = solve_transport(&p, eps, &q, &SolverOptions::default()).unwrap();
        let plain = solve_transport(
            &p,
            eps,
            &q,
            &SolverOptions {
                acceleration: Acceleration::None,
                max_iterations: 20_000,
                ..Default::default()
            },
        );
        let plain_its = match plain {
            Ok(s) => s.log.iterations,
            Err(Error::Convergence { iterations, .. }) => iterations,
            Err(e) => panic!("{e}"),
        };
        assert!(
            plain_its >= 10 * dsa.log.iterations,
            "{plain_its} vs {}",
            dsa.log.iterations
        );
    }

    #[test]
    fn linear_in_source() {
        let p = unit_problem();
        let q = quad(8);
        let mut p2 = p.clone();
        p2.source = CoefficientField::constant(2.0);
        let a = solve_transport(&p, 0.5, &q, &SolverOptions::default()).unwrap();
        let b = solve_transport(&p2, 0.5, &q, &SolverOptions::default()).unwrap();
        let diff = (&b.u - &a.u * 2.0).norm() / b.u.norm();
        assert!(diff < 1e-9);
    }

    #[test]
    fn anisotropic_kernel_solves() {
        let p = unit_problem().with_kernel(crate::problem::KernelSpec::Linear { g_factor: 0.5 });
        let sol = solve_transport(&p, 0.1, &quad(8), &SolverOptions::default()).unwrap();
        assert!(sol.balance_residual < 1e-9);
        assert!(sol.log.iterations < 100);
    }

    #[test]
    fn zero_problem_trace_and_derivative() {
        let mut p = unit_problem();
        p.source = CoefficientField::constant(0.0);
        let sol = solve_transport(&p, 1.0, &quad(4), &SolverOptions::default()).unwrap();
        assert!(outflow_trace(&sol).iter().all(|t| t.value == 0.0));
        assert!(directional_derivative(&sol).iter().all(|v| *v == 0.0));
        assert_eq!(sol.balance_residual, 0.0);
    }

    #[test]
    fn absorber_trace_and_derivative() {
        // sigma tiny and gamma = big: effectively a pure absorber with inflow at x = 0
        let big = 1.0;
        let q = quad(4);
        let grid = Grid1D::new(1.0, 200).unwrap();
        let op = assemble_scattering(&Kernel::Isotropic, q.clone())
            .unwrap()
            .certified()
            .unwrap();
        let setup = TransportSetup {
            grid,
            op: &op,
            gamma: vec![big; 200],
            sigma: vec![0.0; 200],
            source: PhaseField::zeros(200, 4),
            inflow: Inflow {
                left: 1.0,
                right: 0.0,
            },
            eps: 1.0,
        };
        let sol = solve(&setup, &SolverOptions::default()).unwrap();
        for t in outflow_trace(&sol) {
            if t.mu > 0.0 {
                assert!((t.value - (-big / t.mu).exp()).abs() < 1e-4);
            } else {
                assert!(t.value.abs() < 1e-15);
            }
        }
        let d = directional_derivative(&sol);
        for i in [10usize, 100, 190] {
            for j in 0..4 {
                if q.nodes()[j] > 0.0 {
                    assert!((d[(i, j)] + big * sol.u[(i, j)]).abs() < 1e-4);
                }
            }
        }
    }
}
