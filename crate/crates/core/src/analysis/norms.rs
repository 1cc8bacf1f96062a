//! Discrete norms on `cells x ordinates`.
//!
//! `L2(D)` is the midpoint rule in `x` tensored with the ordinate weights.

use serde::Serialize;

use crate::problem::Grid1D;
use crate::transport::TracePoint;
use crate::velocity::{shifted_solve, weighted_inner, ScatteringOperator};
use crate::{Error, PhaseField, Result};

fn check_shape(field: &PhaseField, w: &[f64]) -> Result<()> {
    if field.ncols() != w.len() {
        return Err(Error::Argument(format!(
            "field has {} ordinates, quadrature has {}",
            field.ncols(),
            w.len()
        )));
    }
    Ok(())
}

/// `u_bar_i = sum_j w_j u_ij`.
pub fn velocity_average(field: &PhaseField, w: &[f64]) -> Result<Vec<f64>> {
    check_shape(field, w)?;
    Ok(crate::transport::velocity_average(field, w))
}

/// `u = mean + fluctuation`, orthogonal in `L2(D)`.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub mean: Vec<f64>,
    pub fluctuation: PhaseField,
}

pub fn split(field: &PhaseField, w: &[f64]) -> Result<Splitting> {
    let mean = velocity_average(field, w)?;
    let fluctuation =
        PhaseField::from_fn(field.nrows(), field.ncols(), |i, j| field[(i, j)] - mean[i]);
    Ok(Splitting { mean, fluctuation })
}

/// Broadcast cell values over all ordinates.
pub fn broadcast(values: &[f64], ordinates: usize) -> PhaseField {
    PhaseField::from_fn(values.len(), ordinates, |i, _| values[i])
}

pub fn l2_norm(field: &PhaseField, grid: &Grid1D, w: &[f64]) -> f64 {
    lp_norm(field, grid, w, 2.0)
}

pub fn lp_norm(field: &PhaseField, grid: &Grid1D, w: &[f64], p: f64) -> f64 {
    let h = grid.h();
    let s: f64 = (0..field.nrows())
        .map(|i| {
            field
                .row(i)
                .iter()
                .zip(w)
                .map(|(u, w)| w * u.abs().powf(p))
                .sum::<f64>()
        })
        .sum();
    (h * s).powf(1.0 / p)
}

/// `L2` norm of a velocity-independent cell field.
pub fn scalar_l2(values: &[f64], grid: &Grid1D) -> f64 {
    (grid.h() * values.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `||u||_{L2(Gamma+; |mu|)}` from an outflow trace.
pub fn boundary_norm(trace: &[TracePoint]) -> f64 {
    trace
        .iter()
        .map(|t| t.weight * t.value * t.value)
        .sum::<f64>()
        .sqrt()
}

/// Unscaled coefficients per cell plus `eps`: enough to form `C_eps = eps gamma + (sigma/eps)(I - K)`.
#[derive(Debug, Clone)]
pub struct NormContext<'a> {
    pub grid: Grid1D,
    pub op: &'a ScatteringOperator,
    pub gamma: Vec<f64>,
    pub sigma: Vec<f64>,
    pub eps: f64,
}

impl NormContext<'_> {
    fn check(&self, field: &PhaseField) -> Result<()> {
        check_shape(field, self.op.weights())?;
        if field.nrows() != self.grid.n_cells()
            || self.gamma.len() != field.nrows()
            || self.sigma.len() != field.nrows()
        {
            return Err(Error::Argument(
                "field, grid and coefficients disagree on the cell count".into(),
            ));
        }
        Ok(())
    }
}

/// `||u||^2_{C_eps} = (eps gamma u + (sigma/eps)(I - K) u, u)`.
pub fn ceps_norm_sq(field: &PhaseField, ctx: &NormContext<'_>) -> Result<f64> {
    ctx.check(field)?;
    let w = ctx.op.weights();
    let k = ctx.op.matrix();
    let mut total = 0.0;
    for i in 0..field.nrows() {
        let u: Vec<f64> = field.row(i).iter().copied().collect();
        let ku = k * nalgebra::DVector::from_column_slice(&u);
        let fluct: Vec<f64> = u.iter().zip(ku.iter()).map(|(a, b)| a - b).collect();
        total += ctx.eps * ctx.gamma[i] * weighted_inner(w, &u, &u)
            + ctx.sigma[i] / ctx.eps * weighted_inner(w, &fluct, &u);
    }
    Ok(ctx.grid.h() * total)
}

/// `||u||^2_{C_eps^-1} = (C_eps^-1 u, u)`.
pub fn ceps_inv_norm_sq(field: &PhaseField, ctx: &NormContext<'_>) -> Result<f64> {
    ctx.check(field)?;
    let w = ctx.op.weights();
    let mut total = 0.0;
    for i in 0..field.nrows() {
        let u: Vec<f64> = field.row(i).iter().copied().collect();
        let x = shifted_solve(ctx.op, ctx.eps * ctx.gamma[i], ctx.sigma[i] / ctx.eps, &u)?;
        total += weighted_inner(w, &x, &u);
    }
    Ok(ctx.grid.h() * total)
}

#[derive(Debug, Clone, Serialize)]
pub struct NormSet {
    pub l2: f64,
    /// `(p, ||u||_{Lp(D)})`.
    pub lp: Vec<(f64, f64)>,
    pub bdry_plus: Option<f64>,
    pub ceps: f64,
    pub ceps_inv: f64,
    /// `(1/eps)||u - u_bar||^2 + eps ||u_bar||^2`, compared with `||u||^2_{C_eps}`.
    pub equiv1_proxy: f64,
    /// `eps ||u - u_bar||^2 + (1/eps)||u_bar||^2`, compared with `||u||^2_{C_eps^-1}`.
    pub equiv2_proxy: f64,
}

impl NormSet {
    pub fn equiv1_ratio(&self) -> f64 {
        self.ceps * self.ceps / self.equiv1_proxy
    }

    pub fn equiv2_ratio(&self) -> f64 {
        self.ceps_inv * self.ceps_inv / self.equiv2_proxy
    }
}

/// `[c / c_K, 2 / c]` and `[c / 2, c_K / c]` for coefficient bounds `c <= sigma, gamma <= 1/c`.
pub fn equivalence_windows(c: f64, c_k: f64) -> ((f64, f64), (f64, f64)) {
    ((c / c_k, 2.0 / c), (c / 2.0, c_k / c))
}

pub fn norms(
    field: &PhaseField,
    ctx: &NormContext<'_>,
    ps: &[f64],
    trace: Option<&[TracePoint]>,
) -> Result<NormSet> {
    ctx.check(field)?;
    let w = ctx.op.weights();
    let s = split(field, w)?;
    let mean_sq = scalar_l2(&s.mean, &ctx.grid).powi(2);
    let fluct_sq = l2_norm(&s.fluctuation, &ctx.grid, w).powi(2);
    Ok(NormSet {
        l2: l2_norm(field, &ctx.grid, w),
        lp: ps
            .iter()
            .map(|p| (*p, lp_norm(field, &ctx.grid, w, *p)))
            .collect(),
        bdry_plus: trace.map(boundary_norm),
        ceps: ceps_norm_sq(field, ctx)?.max(0.0).sqrt(),
        ceps_inv: ceps_inv_norm_sq(field, ctx)?.max(0.0).sqrt(),
        equiv1_proxy: fluct_sq / ctx.eps + ctx.eps * mean_sq,
        equiv2_proxy: ctx.eps * fluct_sq + mean_sq / ctx.eps,
    })
}
