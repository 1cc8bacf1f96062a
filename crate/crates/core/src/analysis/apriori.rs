use serde::Serialize;

use super::norms::{
    boundary_norm, ceps_inv_norm_sq, ceps_norm_sq, l2_norm, scalar_l2, split, NormContext,
};
use crate::transport::{directional_derivative, outflow_trace, slab_quadrature, TransportSolution};
use crate::velocity::ScatteringOperator;
use crate::{Error, Result};

/// Growth factor across a sweep above which a quantity counts as unbounded.
pub const GROWTH_LIMIT: f64 = 2.0;

/// Scaled quantities that stay bounded in the diffusive regime, for one eps.
#[derive(Debug, Clone, Serialize)]
pub struct AprioriRow {
    pub eps: f64,
    /// `||u||_{L2(Gamma+;|mu|)} / sqrt(eps)`
    pub bdry_over_sqrt_eps: f64,
    /// `||u - u_bar||_{L2} / eps`
    pub fluct_over_eps: f64,
    /// `||u_bar||_{L2}`
    pub mean_l2: f64,
    /// `||mu du/dx||_{L2}`
    pub deriv_l2: f64,
    /// `max |u|` over cells and ordinates.
    pub max_norm: f64,
    /// `||u||^2_{Gamma+} + ||u||^2_{C_eps}`
    pub energy_lhs: f64,
    /// `||f||^2_{C_eps^-1} + ||g||^2_{Gamma-}`
    pub energy_rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AprioriTable {
    pub rows: Vec<AprioriRow>,
    /// Largest value over the sweep divided by the value at the largest eps.
    pub growth: Vec<(String, f64)>,
    pub flags: Vec<String>,
    pub bounded: bool,
}

impl NormContext<'_> {
    /// Context whose `C_eps` is exactly the collision operator of the solve.
    pub fn from_solution<'a>(
        sol: &TransportSolution,
        op: &'a ScatteringOperator,
    ) -> NormContext<'a> {
        let eps = sol.eps;
        NormContext {
            grid: sol.grid,
            op,
            gamma: sol.gamma.iter().map(|g| g / eps).collect(),
            sigma: sol.sigma.iter().map(|s| s * eps).collect(),
            eps,
        }
    }
}

pub fn apriori_row(sol: &TransportSolution, op: &ScatteringOperator) -> Result<AprioriRow> {
    let quad = slab_quadrature(op)?;
    let w = quad.weights();
    let eps = sol.eps;
    let ctx = NormContext::from_solution(sol, op);
    let s = split(&sol.u, w)?;
    let bdry = boundary_norm(&outflow_trace(sol));
    let g_sq = sol.inflow.weighted_norm(quad).powi(2);
    Ok(AprioriRow {
        eps,
        bdry_over_sqrt_eps: bdry / eps.sqrt(),
        fluct_over_eps: l2_norm(&s.fluctuation, &sol.grid, w) / eps,
        mean_l2: scalar_l2(&s.mean, &sol.grid),
        deriv_l2: l2_norm(&directional_derivative(sol), &sol.grid, w),
        max_norm: sol.u.iter().fold(0.0, |m, v| m.max(v.abs())),
        energy_lhs: bdry * bdry + ceps_norm_sq(&sol.u, &ctx)?,
        energy_rhs: ceps_inv_norm_sq(&sol.source, &ctx)? + g_sq,
    })
}

/// Bounded-ratio table over a sweep (rows ordered by decreasing eps).
pub fn apriori_check(rows: Vec<AprioriRow>) -> Result<AprioriTable> {
    if rows.len() < 3 {
        return Err(Error::Validation(format!(
            "a-priori checks need at least 3 eps values, got {}",
            rows.len()
        )));
    }
    let columns: [(&str, fn(&AprioriRow) -> f64); 5] = [
        ("bdry_over_sqrt_eps", |r| r.bdry_over_sqrt_eps),
        ("fluct_over_eps", |r| r.fluct_over_eps),
        ("mean_l2", |r| r.mean_l2),
        ("deriv_l2", |r| r.deriv_l2),
        ("max_norm", |r| r.max_norm),
    ];
    let mut growth = Vec::new();
    let mut flags = Vec::new();
    for (name, get) in columns {
        let first = get(&rows[0]);
        let peak = rows.iter().map(get).fold(0.0, f64::max);
        let g = if peak == 0.0 {
            1.0
        } else if first == 0.0 {
            f64::INFINITY
        } else {
            peak / first
        };
        if g > GROWTH_LIMIT {
            flags.push(format!("{name} grows by {g:.3}x across the sweep"));
        }
        growth.push((name.to_string(), g));
    }
    for r in &rows {
        if r.energy_lhs > r.energy_rhs * (1.0 + 1e-8) + 1e-300 {
            flags.push(format!(
                "energy estimate violated at eps = {:e}: {:e} > {:e}",
                r.eps, r.energy_lhs, r.energy_rhs
            ));
        }
    }
    let bounded = flags.is_empty();
    Ok(AprioriTable {
        rows,
        growth,
        flags,
        bounded,
    })
}
