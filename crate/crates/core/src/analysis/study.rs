//! Epsilon sweeps: transport against the diffusion limit on a coupled mesh.

use std::collections::BTreeMap;

use serde::Serialize;

use super::apriori::{apriori_check, apriori_row, AprioriRow, AprioriTable};
use super::corrector::{corrector_u1, remainder};
use super::fit::fit_loglog;
use super::norms::{boundary_norm, broadcast, l2_norm, lp_norm};
use crate::diffusion::{solve_diffusion, weak_residual, DiffusionSolution, LimitCoefficient};
use crate::problem::{Grid1D, ProblemSpec};
use crate::transport::{
    directional_derivative, outflow_trace, slab_operator, solve_transport_with_operator,
    SolverOptions, TransportSolution,
};
use crate::velocity::{slab_diffusion_factor, AngularQuadrature, ScatteringOperator};
use crate::{Error, Result};

/// Note attached to studies whose coefficients or source have jumps.
pub const LOW_REGULARITY_NOTE: &str = "rate not asserted; low-regularity regime";

#[derive(Debug, Clone)]
pub struct StudyOptions {
    /// Strictly decreasing, geometric with ratio at most 1/2, at least four values.
    pub eps_list: Vec<f64>,
    /// Extra `Lp` error norms; the report columns cover `p = 1` and `p = 4`.
    pub lp: Vec<f64>,
    pub min_cells: usize,
    /// Cells per `eps`: `h <= eps / cells_per_eps` on a unit slab.
    pub cells_per_eps: f64,
    pub solver: SolverOptions,
    /// Worker threads for the per-eps solves; `1` runs sequentially.
    pub jobs: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            eps_list: (1..=6).map(|k| 0.5f64.powi(k)).collect(),
            lp: vec![1.0, 4.0],
            min_cells: 64,
            cells_per_eps: 4.0,
            solver: SolverOptions::default(),
            jobs: 1,
        }
    }
}

/// Mesh coupling: `max(min_cells, ceil(L cells_per_eps / eps))`.
pub fn cells_for(length: f64, eps: f64, min_cells: usize, cells_per_eps: f64) -> usize {
    let n = (length * cells_per_eps / eps - 1e-9).ceil();
    (n as usize).max(min_cells)
}

pub fn validate_eps_list(eps: &[f64]) -> Result<()> {
    if eps.len() < 4 {
        return Err(Error::Validation(format!(
            "a study needs at least 4 eps values, got {}",
            eps.len()
        )));
    }
    if eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::Validation(
            "eps values must be positive and finite".into(),
        ));
    }
    let ratio = eps[1] / eps[0];
    if ratio > 0.5 + 1e-12 {
        return Err(Error::Validation(format!("eps ratio {ratio} exceeds 1/2")));
    }
    for w in eps.windows(2) {
        let r = w[1] / w[0];
        if (r - ratio).abs() > 1e-9 * ratio {
            return Err(Error::Validation(format!(
                "eps list is not geometric: ratio {r} differs from {ratio}"
            )));
        }
    }
    Ok(())
}

/// Measured quantities for one eps.
#[derive(Debug, Clone, Serialize)]
pub struct EpsRecord {
    pub eps: f64,
    pub cells: usize,
    /// `||u_eps - u0||_{L2}`
    pub err_total: f64,
    /// `||u_eps - u_bar_eps||_{L2}`
    pub err_fluct: f64,
    /// `||u_eps||_{L2(Gamma+;|mu|)}`
    pub bdry: f64,
    /// `||mu du_eps/dx||_{L2}`
    pub deriv: f64,
    /// `||u_eps - u0 - eps u1||_{L2}`
    pub remainder: f64,
    /// `(p, ||u_eps - u0||_{Lp})`
    pub err_lp: Vec<(f64, f64)>,
    /// Largest weak residual of the transport averages in the limit equation, per unit hat mass.
    pub weak_consistency: f64,
    pub iterations: usize,
    pub spectral_radius_estimate: f64,
    pub balance_residual: f64,
    pub negative_entries: usize,
}

impl EpsRecord {
    pub fn lp_error(&self, p: f64) -> Option<f64> {
        self.err_lp.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlopeEntry {
    pub quantity: String,
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    /// Rate the theory predicts, where it gives one.
    pub predicted: Option<f64>,
    /// Acceptance window for smooth data; `None` when nothing is asserted.
    pub window: Option<(f64, f64)>,
    pub within_window: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub eps_list: Vec<f64>,
    pub records: Vec<EpsRecord>,
    pub slopes: Vec<SlopeEntry>,
    /// Largest over smallest `deriv` across the sweep.
    pub deriv_variation: Option<f64>,
    pub err_total_decreasing: Option<bool>,
    pub smooth: bool,
    pub notes: Vec<String>,
    pub apriori: Option<AprioriTable>,
    /// `sigma A11`, the velocity factor of the limit coefficient.
    pub diffusion_factor: f64,
    pub c_k: f64,
    pub ordinates: usize,
}

impl ConvergenceReport {
    pub fn slope(&self, quantity: &str) -> Option<&SlopeEntry> {
        self.slopes.iter().find(|s| s.quantity == quantity)
    }
}

struct Measured {
    record: EpsRecord,
    apriori: AprioriRow,
}

fn cell_averages(problem: &ProblemSpec, f: &crate::problem::CoefficientField) -> Vec<f64> {
    let g = problem.grid;
    (0..g.n_cells())
        .map(|i| f.average(g.edge(i), g.edge(i + 1)))
        .collect()
}

fn measure(
    problem: &ProblemSpec,
    sol: &TransportSolution,
    diffusion: &DiffusionSolution,
    coef: &LimitCoefficient,
    op: &ScatteringOperator,
    lp: &[f64],
) -> Result<Measured> {
    let w = op.weights();
    let grid = sol.grid;
    let no = w.len();
    let u0 = diffusion.at_centers();
    let err = &sol.u - broadcast(&u0, no);
    let fluct = &sol.u - broadcast(&sol.u_bar, no);
    let sigma_bar = cell_averages(problem, &problem.sigma);
    let u1 = corrector_u1(diffusion, &sigma_bar, op)?;
    let psi = remainder(&sol.u, &u0, &u1, sol.eps)?;

    // transport averages at the nodes, inserted into the limit equation
    let nodal: Vec<f64> = (0..=grid.n_cells())
        .map(|k| sol.edges.row(k).iter().zip(w).map(|(u, w)| u * w).sum())
        .collect();
    let weak = weak_residual(&nodal, problem, coef)?
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()))
        / grid.h();

    let record = EpsRecord {
        eps: sol.eps,
        cells: grid.n_cells(),
        err_total: l2_norm(&err, &grid, w),
        err_fluct: l2_norm(&fluct, &grid, w),
        bdry: boundary_norm(&outflow_trace(sol)),
        deriv: l2_norm(&directional_derivative(sol), &grid, w),
        remainder: l2_norm(&psi, &grid, w),
        err_lp: lp
            .iter()
            .map(|p| (*p, lp_norm(&err, &grid, w, *p)))
            .collect(),
        weak_consistency: weak,
        iterations: sol.log.iterations,
        spectral_radius_estimate: sol.log.spectral_radius_estimate,
        balance_residual: sol.balance_residual,
        negative_entries: sol.negative_entries,
    };
    Ok(Measured {
        record,
        apriori: apriori_row(sol, op)?,
    })
}

fn run_one(
    problem: &ProblemSpec,
    eps: f64,
    op: &ScatteringOperator,
    coef: &LimitCoefficient,
    diffusion: &BTreeMap<usize, DiffusionSolution>,
    options: &StudyOptions,
) -> Result<Measured> {
    let cells = cells_for(
        problem.grid.length(),
        eps,
        options.min_cells,
        options.cells_per_eps,
    );
    let p = problem
        .clone()
        .with_grid(Grid1D::new(problem.grid.length(), cells)?);
    let sol = solve_transport_with_operator(&p, eps, op, &options.solver)?;
    measure(&p, &sol, &diffusion[&cells], coef, op, &options.lp)
}

/// Transport solves per eps against one diffusion solve per mesh, with fitted slopes.
pub fn convergence_study(
    problem: &ProblemSpec,
    quad: &AngularQuadrature,
    options: &StudyOptions,
) -> Result<ConvergenceReport> {
    validate_eps_list(&options.eps_list)?;
    problem.validate()?;
    options.solver.validate()?;
    let op = slab_operator(problem, quad)?;
    let factor = slab_diffusion_factor(&op)?;
    let coef = LimitCoefficient::Factor(factor);
    let c_k = op.certification().map(|c| c.c_k).unwrap_or(f64::NAN);
    let length = problem.grid.length();

    let mut diffusion = BTreeMap::new();
    for &eps in &options.eps_list {
        let cells = cells_for(length, eps, options.min_cells, options.cells_per_eps);
        if let std::collections::btree_map::Entry::Vacant(e) = diffusion.entry(cells) {
            let p = problem.clone().with_grid(Grid1D::new(length, cells)?);
            e.insert(solve_diffusion(&p, &coef)?);
        }
    }

    let results: Vec<Result<Measured>> = if options.jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
        pool.install(|| {
            options
                .eps_list
                .par_iter()
                .map(|&eps| run_one(problem, eps, &op, &coef, &diffusion, options))
                .collect()
        })
    } else {
        options
            .eps_list
            .iter()
            .map(|&eps| run_one(problem, eps, &op, &coef, &diffusion, options))
            .collect()
    };

    let smooth =
        problem.sigma.is_smooth() && problem.gamma.is_smooth() && problem.source.is_smooth();
    let mut measured = Vec::new();
    for (eps, r) in options.eps_list.iter().zip(results) {
        match r {
            Ok(m) => measured.push(m),
            Err(e) => {
                let partial = assemble(measured, smooth, factor, c_k, quad.len());
                return Err(Error::StudyAborted {
                    eps: *eps,
                    partial: Box::new(partial),
                    source: Box::new(e),
                });
            }
        }
    }
    Ok(assemble(measured, smooth, factor, c_k, quad.len()))
}

fn slope_of(eps: &[f64], values: &[f64]) -> (Option<f64>, Option<f64>) {
    match fit_loglog(eps, values) {
        Ok(f) => (Some(f.slope), Some(f.stderr)),
        Err(_) => (None, None),
    }
}

fn assemble(
    measured: Vec<Measured>,
    smooth: bool,
    factor: f64,
    c_k: f64,
    ordinates: usize,
) -> ConvergenceReport {
    let (records, rows): (Vec<EpsRecord>, Vec<AprioriRow>) =
        measured.into_iter().map(|m| (m.record, m.apriori)).unzip();
    let eps: Vec<f64> = records.iter().map(|r| r.eps).collect();
    let mut notes = Vec::new();
    if !smooth {
        notes.push(LOW_REGULARITY_NOTE.to_string());
    }
    type Getter = fn(&EpsRecord) -> Option<f64>;
    let table: [(&str, Getter, Option<f64>, Option<(f64, f64)>); 7] = [
        (
            "err_total",
            |r| Some(r.err_total),
            Some(1.0),
            Some((0.85, 1.15)),
        ),
        (
            "err_fluct",
            |r| Some(r.err_fluct),
            Some(1.0),
            Some((0.85, 1.15)),
        ),
        ("bdry", |r| Some(r.bdry), Some(0.5), Some((0.35, 0.65))),
        ("deriv", |r| Some(r.deriv), Some(0.0), None),
        (
            "remainder",
            |r| Some(r.remainder),
            Some(1.0),
            Some((0.85, f64::INFINITY)),
        ),
        // interpolation between L2 and L-infinity predicts min(1, 2/p)
        ("err_l1", |r| r.lp_error(1.0), Some(1.0), None),
        (
            "err_l4",
            |r| r.lp_error(4.0),
            Some(0.5),
            Some((0.45, f64::INFINITY)),
        ),
    ];
    let mut slopes = Vec::new();
    for (name, get, predicted, window) in table {
        let values: Option<Vec<f64>> = records.iter().map(get).collect();
        let Some(values) = values else { continue };
        let (slope, stderr) = if eps.len() >= 2 {
            slope_of(&eps, &values)
        } else {
            (None, None)
        };
        let window = if smooth { window } else { None };
        let within_window = match (slope, window) {
            (Some(s), Some((lo, hi))) => Some(s >= lo && s <= hi),
            _ => None,
        };
        slopes.push(SlopeEntry {
            quantity: name.to_string(),
            slope,
            stderr,
            predicted,
            window,
            within_window,
        });
    }
    let deriv_variation = if records.is_empty() {
        None
    } else {
        let hi = records.iter().map(|r| r.deriv).fold(0.0, f64::max);
        let lo = records
            .iter()
            .map(|r| r.deriv)
            .fold(f64::INFINITY, f64::min);
        Some(if hi == 0.0 { 1.0 } else { hi / lo })
    };
    let err_total_decreasing =
        (records.len() >= 2).then(|| records.windows(2).all(|w| w[1].err_total < w[0].err_total));
    let apriori = apriori_check(rows).ok();
    if let Some(t) = &apriori {
        notes.extend(t.flags.iter().cloned());
    }
    ConvergenceReport {
        eps_list: eps,
        records,
        slopes,
        deriv_variation,
        err_total_decreasing,
        smooth,
        notes,
        apriori,
        diffusion_factor: factor,
        c_k,
        ordinates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::CoefficientField;

    fn smooth() -> ProblemSpec {
        ProblemSpec::new(
            Grid1D::new(1.0, 64).unwrap(),
            CoefficientField::sine(1.0, 0.5, 1.0).unwrap(),
            CoefficientField::constant(1.0),
            CoefficientField::constant(1.0),
        )
    }

    #[test]
    fn mesh_rule() {
        assert_eq!(cells_for(1.0, 0.5, 64, 4.0), 64);
        assert_eq!(cells_for(1.0, 2f64.powi(-6), 64, 4.0), 256);
        assert_eq!(cells_for(2.0, 2f64.powi(-6), 64, 4.0), 512);
    }

    #[test]
    fn eps_list_validation() {
        assert!(validate_eps_list(&[0.5]).is_err());
        assert!(validate_eps_list(&[0.5, 0.25, 0.1, 0.05]).is_err());
        assert!(validate_eps_list(&[0.5, 0.4, 0.32, 0.256]).is_err());
        assert!(validate_eps_list(&[0.5, 0.25, 0.125, 0.0625]).is_ok());
        let q = AngularQuadrature::gauss(4).unwrap();
        let opts = StudyOptions {
            eps_list: vec![0.5],
            ..Default::default()
        };
        assert!(matches!(
            convergence_study(&smooth(), &q, &opts),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn short_sweep_runs_and_parallel_matches() {
        let q = AngularQuadrature::gauss(8).unwrap();
        let opts = StudyOptions {
            eps_list: vec![0.5, 0.25, 0.125, 0.0625],
            ..Default::default()
        };
        let a = convergence_study(&smooth(), &q, &opts).unwrap();
        let b = convergence_study(&smooth(), &q, &StudyOptions { jobs: 3, ..opts }).unwrap();
        assert_eq!(a.records.len(), 4);
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.err_total.to_bits(), y.err_total.to_bits());
            assert!(x.balance_residual <= 1e-10);
        }
        assert!(a.smooth);
        assert!(a.notes.iter().all(|n| n != LOW_REGULARITY_NOTE));
        assert!(a.err_total_decreasing.unwrap());
        let s = a.slope("err_total").unwrap();
        assert!(s.slope.unwrap() > 0.5);
    }

    #[test]
    fn piecewise_is_flagged() {
        let mut p = smooth();
        p.sigma = CoefficientField::piecewise(vec![0.5], vec![1.0, 4.0]).unwrap();
        let q = AngularQuadrature::gauss(4).unwrap();
        let opts = StudyOptions {
            eps_list: vec![0.5, 0.25, 0.125, 0.0625],
            ..Default::default()
        };
        let r = convergence_study(&p, &q, &opts).unwrap();
        assert!(!r.smooth);
        assert!(r.notes.iter().any(|n| n == LOW_REGULARITY_NOTE));
        assert!(r.slopes.iter().all(|s| s.window.is_none()));
    }

    #[test]
    fn failed_solve_keeps_partial_report() {
        let q = AngularQuadrature::gauss(4).unwrap();
        let opts = StudyOptions {
            eps_list: vec![0.5, 0.25, 0.125, 0.0625],
            solver: SolverOptions {
                max_iterations: 3,
                acceleration: crate::transport::Acceleration::None,
                ..Default::default()
            },
            ..Default::default()
        };
        match convergence_study(&smooth(), &q, &opts) {
            Err(Error::StudyAborted {
                partial, source, ..
            }) => {
                assert!(matches!(*source, Error::Convergence { .. }));
                assert!(partial.records.is_empty());
            }
            other => panic!("expected an aborted study, got {other:?}"),
        }
    }
}
