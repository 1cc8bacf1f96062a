//! Text artifacts: CSV with full-precision floats, JSON, two-column plot files.
//!
//! Floats are written with `{:e}`, the shortest representation that parses
//! back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::analysis::ConvergenceReport;
use crate::diffusion::DiffusionSolution;
use crate::transport::TransportSolution;
use crate::velocity::DiffusionTensor;
use crate::{Error, Result};

pub fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    write_text(path, &csv_string(header, rows))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Argument(format!("serializing JSON: {e}")))?;
    text.push('\n');
    write_text(path, &text)
}

/// `x, mu, u` per cell and ordinate.
pub fn transport_angular_csv(sol: &TransportSolution) -> String {
    let rows = (0..sol.u.nrows()).flat_map(|i| {
        let x = sol.grid.center(i);
        (0..sol.u.ncols()).map(move |j| vec![x, sol.mus[j], sol.u[(i, j)]])
    });
    csv_string(&["x", "mu", "u"], rows)
}

/// `x, u_bar` per cell.
pub fn transport_average_csv(sol: &TransportSolution) -> String {
    csv_string(
        &["x", "u_bar"],
        sol.u_bar
            .iter()
            .enumerate()
            .map(|(i, u)| vec![sol.grid.center(i), *u]),
    )
}

/// `x, u0, grad_u0, flux` at cell centres.
pub fn diffusion_csv(sol: &DiffusionSolution) -> String {
    let u0 = sol.at_centers();
    csv_string(
        &["x", "u0", "grad_u0", "flux"],
        (0..u0.len()).map(|i| vec![sol.grid.center(i), u0[i], sol.gradient[i], sol.flux[i]]),
    )
}

/// `x, u0` at the nodes.
pub fn diffusion_nodes_csv(sol: &DiffusionSolution) -> String {
    csv_string(
        &["x", "u0"],
        sol.nodes.iter().zip(&sol.u0).map(|(x, u)| vec![*x, *u]),
    )
}

/// Per-cell tensor entries and smallest eigenvalue.
pub fn tensor_csv(centers: &[f64], t: &DiffusionTensor) -> String {
    csv_string(
        &[
            "x",
            "a11",
            "a12",
            "a13",
            "a22",
            "a23",
            "a33",
            "min_eigenvalue",
        ],
        t.cells
            .iter()
            .zip(&t.cell_min_eigenvalues)
            .zip(centers)
            .map(|((a, m), x)| {
                vec![
                    *x,
                    a[(0, 0)],
                    a[(0, 1)],
                    a[(0, 2)],
                    a[(1, 1)],
                    a[(1, 2)],
                    a[(2, 2)],
                    *m,
                ]
            }),
    )
}

/// `eps, err_total, err_fluct, bdry, deriv, remainder, err_l1, err_l4`; absent `Lp` columns are NaN.
pub fn report_csv(report: &ConvergenceReport) -> String {
    csv_string(
        &[
            "eps",
            "err_total",
            "err_fluct",
            "bdry",
            "deriv",
            "remainder",
            "err_l1",
            "err_l4",
        ],
        report.records.iter().map(|r| {
            vec![
                r.eps,
                r.err_total,
                r.err_fluct,
                r.bdry,
                r.deriv,
                r.remainder,
                r.lp_error(1.0).unwrap_or(f64::NAN),
                r.lp_error(4.0).unwrap_or(f64::NAN),
            ]
        }),
    )
}

/// Gnuplot-style `log(eps) log(value)` pairs.
pub fn plot_dat(quantity: &str, eps: &[f64], values: &[f64]) -> String {
    let mut s = format!("# log_eps log_{quantity}\n");
    for (e, v) in eps.iter().zip(values) {
        let _ = writeln!(s, "{:e} {:e}", e.ln(), v.ln());
    }
    s
}

/// Plot files for every report column, keyed by quantity name.
pub fn report_plots(report: &ConvergenceReport) -> Vec<(String, String)> {
    let eps = &report.eps_list;
    let r = &report.records;
    let mut cols: Vec<(&str, Vec<f64>)> = vec![
        ("err_total", r.iter().map(|r| r.err_total).collect()),
        ("err_fluct", r.iter().map(|r| r.err_fluct).collect()),
        ("bdry", r.iter().map(|r| r.bdry).collect()),
        ("deriv", r.iter().map(|r| r.deriv).collect()),
        ("remainder", r.iter().map(|r| r.remainder).collect()),
    ];
    for (name, p) in [("err_l1", 1.0), ("err_l4", 4.0)] {
        if let Some(v) = r
            .iter()
            .map(|r| r.lp_error(p))
            .collect::<Option<Vec<f64>>>()
        {
            cols.push((name, v));
        }
    }
    cols.into_iter()
        .map(|(name, v)| (name.to_string(), plot_dat(name, eps, &v)))
        .collect()
}
