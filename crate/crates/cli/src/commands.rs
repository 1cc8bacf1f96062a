use std::path::{Path, PathBuf};

use serde_json::json;

use difflim::analysis::{
    convergence_study, l2_norm, lp_norm, norms, ConvergenceReport, NormContext, StudyOptions,
};
use difflim::diffusion::{
    cosh_reference, solve_diffusion, solve_diffusion_with_source, DiffusionSolution,
    LimitCoefficient,
};
use difflim::problem::config::Config;
use difflim::problem::{
    mms_diffusion_source, mms_transport_source, Inflow, ManufacturedCase, ProblemSpec, Profile,
};
use difflim::transport::{
    outflow_trace, slab_operator, solve as run_transport, TransportSetup, TransportSolution,
};
use difflim::velocity::{
    assemble_scattering, certify_assumptions, diffusion_tensor, slab_diffusion_factor,
    velocity_moment_tensor,
};
use difflim::{output, Error, Result};

use crate::manifest::Artifacts;
use crate::Mode;

pub struct Context {
    pub config_path: PathBuf,
    pub out: PathBuf,
    pub jobs: usize,
    pub argv: Vec<String>,
}

struct Loaded {
    text: String,
    cfg: Config,
}

fn load(ctx: &Context) -> Result<Loaded> {
    let path = &ctx.config_path;
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        context: format!("reading config {}", path.display()),
        source: e,
    })?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let cfg = Config::parse(&text, dir)?;
    std::fs::create_dir_all(&ctx.out).map_err(|e| Error::Io {
        context: format!("creating {}", ctx.out.display()),
        source: e,
    })?;
    Ok(Loaded { text, cfg })
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Argument(e.to_string()))
}

pub fn certify(ctx: &Context) -> Result<()> {
    let Loaded { text, cfg } = load(ctx)?;
    let spec = cfg.kernel_spec();
    let kernel = spec.to_kernel()?;
    let slab = assemble_scattering(&kernel, cfg.quadrature()?)?;
    let slab_report = certify_assumptions(&slab);
    let mut passed = slab_report.passed;
    let mut doc = json!({
        "kernel": to_json(&spec)?,
        "slab": to_json(&slab_report)?,
        "slab_normalization_deviation": slab.normalization_deviation(),
        "warnings": slab.warnings(),
    });
    let mut diagnostics = slab_report.diagnostics.clone();
    println!(
        "slab ({} ordinates): passed {}, c_K = {:.6}, null space dimension {}",
        slab.len(),
        slab_report.passed,
        slab_report.c_k,
        slab_report.null_space_dim
    );
    if spec.has_sphere_form() {
        let sphere = assemble_scattering(&kernel, cfg.sphere_quadrature()?)?;
        let r = certify_assumptions(&sphere);
        println!(
            "sphere ({} directions): passed {}, c_K = {:.6}, null space dimension {}",
            sphere.len(),
            r.passed,
            r.c_k,
            r.null_space_dim
        );
        passed &= r.passed;
        diagnostics.extend(r.diagnostics.iter().cloned());
        doc["sphere"] = to_json(&r)?;
    }
    doc["passed"] = json!(passed);
    let mut art = Artifacts::default();
    art.write_json(&ctx.out, "certify.json", &doc)?;
    art.finish(&ctx.out, &text, &ctx.argv)?;
    for w in slab.warnings() {
        eprintln!("warning: {w}");
    }
    if passed {
        Ok(())
    } else {
        Err(Error::Certification(diagnostics.join("; ")))
    }
}

fn cell_sigma(problem: &ProblemSpec) -> Vec<f64> {
    let g = problem.grid;
    (0..g.n_cells())
        .map(|i| problem.sigma.average(g.edge(i), g.edge(i + 1)))
        .collect()
}

/// `sigma A11`: from the sphere tensor when the kernel has a sphere form, else the slab moment.
fn velocity_factor(cfg: &Config, problem: &ProblemSpec) -> Result<f64> {
    let kernel = problem.scattering.to_kernel()?;
    if problem.scattering.has_sphere_form() {
        let op = assemble_scattering(&kernel, cfg.sphere_quadrature()?)?.certified()?;
        Ok(velocity_moment_tensor(&op)?[(0, 0)])
    } else {
        let op = assemble_scattering(&kernel, cfg.quadrature()?)?.certified()?;
        slab_diffusion_factor(&op)
    }
}

pub fn tensor(ctx: &Context) -> Result<()> {
    let Loaded { text, cfg } = load(ctx)?;
    let problem = cfg.problem()?;
    let sigma = cell_sigma(&problem);
    let centers = problem.grid.centers();
    let mut art = Artifacts::default();
    if problem.scattering.has_sphere_form() {
        let op = assemble_scattering(&problem.scattering.to_kernel()?, cfg.sphere_quadrature()?)?
            .certified()?;
        let t = diffusion_tensor(&op, &sigma)?;
        art.write(&ctx.out, "tensor.csv", &output::tensor_csv(&centers, &t))?;
        art.write_json(
            &ctx.out,
            "tensor.json",
            &json!({ "coercivity_lb": t.coercivity_lb, "cells": t.cells.len() }),
        )?;
        let a = t.cells[0];
        println!(
            "first cell A = [[{:.6}, {:.6}, {:.6}], [{:.6}, {:.6}, {:.6}], [{:.6}, {:.6}, {:.6}]]; coercivity bound {:.6}",
            a[(0, 0)], a[(0, 1)], a[(0, 2)], a[(1, 0)], a[(1, 1)], a[(1, 2)], a[(2, 0)], a[(2, 1)], a[(2, 2)], t.coercivity_lb
        );
    } else {
        // tabulated kernels live on the slab ordinates: only A11 exists
        let op = assemble_scattering(&problem.scattering.to_kernel()?, cfg.quadrature()?)?
            .certified()?;
        let factor = slab_diffusion_factor(&op)?;
        let rows = centers
            .iter()
            .zip(&sigma)
            .map(|(x, s)| vec![*x, factor / s]);
        art.write(
            &ctx.out,
            "tensor.csv",
            &output::csv_string(&["x", "a11"], rows),
        )?;
        println!("slab A11 factor {factor:.6}");
    }
    art.finish(&ctx.out, &text, &ctx.argv)
}

fn manufactured(cfg: &Config) -> Option<ManufacturedCase> {
    cfg.manufactured_case()
        .filter(|c| *c != "constant-coefficient")
        .and_then(|c| ManufacturedCase::by_name(c).ok())
}

pub fn solve(ctx: &Context, eps: Option<f64>, mode: Mode) -> Result<()> {
    match mode {
        Mode::Transport => {
            let eps =
                eps.ok_or_else(|| Error::Argument("--eps is required in transport mode".into()))?;
            solve_transport_cmd(ctx, eps)
        }
        Mode::Diffusion => solve_diffusion_cmd(ctx),
    }
}

fn solve_transport_cmd(ctx: &Context, eps: f64) -> Result<()> {
    let Loaded { text, cfg } = load(ctx)?;
    let problem = cfg.problem()?;
    let q = cfg.quadrature()?;
    let op = slab_operator(&problem, &q)?;
    let scaled = problem.scale(eps)?;
    let mut setup = TransportSetup::from_scaled(&scaled, &op);
    let case = manufactured(&cfg);
    if let Some(case) = &case {
        setup = setup.with_source(mms_transport_source(case, &scaled, &op)?);
        // manufactured solutions vanish on the boundary
        setup.inflow = Inflow::default();
    }
    let mut art = Artifacts::default();
    let sol = match run_transport(&setup, &cfg.solver) {
        Ok(s) => s,
        Err(e) => {
            if let Error::Convergence {
                iterations,
                residuals,
            } = &e
            {
                art.write_json(
                    &ctx.out,
                    "iteration_log.json",
                    &json!({ "converged": false, "iterations": iterations, "residuals": residuals }),
                )?;
                art.finish(&ctx.out, &text, &ctx.argv)?;
            }
            return Err(e);
        }
    };
    art.write(
        &ctx.out,
        "transport_angular.csv",
        &output::transport_angular_csv(&sol),
    )?;
    art.write(
        &ctx.out,
        "transport_average.csv",
        &output::transport_average_csv(&sol),
    )?;
    art.write_json(
        &ctx.out,
        "iteration_log.json",
        &json!({
            "converged": true,
            "iterations": sol.log.iterations,
            "residuals": sol.log.residuals,
            "spectral_radius_estimate": sol.log.spectral_radius_estimate,
            "balance_residual": sol.balance_residual,
            "negative_entries": sol.negative_entries,
        }),
    )?;
    let nctx = NormContext::from_solution(&sol, &op);
    let trace = outflow_trace(&sol);
    let ns = norms(&sol.u, &nctx, &[1.0, 4.0], Some(&trace))?;
    art.write_json(&ctx.out, "norms.json", &to_json(&ns)?)?;
    println!(
        "eps {eps:e}: {} iterations, balance {:.2e}",
        sol.log.iterations, sol.balance_residual
    );
    println!(
        "norms: L2 {:.6e}  L1 {:.6e}  L4 {:.6e}  outflow {:.6e}  C_eps {:.6e}  C_eps^-1 {:.6e}",
        ns.l2,
        ns.lp[0].1,
        ns.lp[1].1,
        ns.bdry_plus.unwrap_or(0.0),
        ns.ceps,
        ns.ceps_inv
    );
    if let Some(case) = &case {
        write_transport_errors(&mut art, ctx, case, &sol)?;
    }
    art.finish(&ctx.out, &text, &ctx.argv)
}

fn write_transport_errors(
    art: &mut Artifacts,
    ctx: &Context,
    case: &ManufacturedCase,
    sol: &TransportSolution,
) -> Result<()> {
    let exact = case.cell_averages(&sol.grid, &sol.mus);
    let err = &sol.u - &exact;
    let l2 = l2_norm(&err, &sol.grid, &sol.weights);
    let l1 = lp_norm(&err, &sol.grid, &sol.weights, 1.0);
    let max = err.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rows = (0..sol.u.nrows()).flat_map(|i| {
        let x = sol.grid.center(i);
        let (u, exact, err) = (&sol.u, &exact, &err);
        (0..sol.u.ncols()).map(move |j| vec![x, sol.mus[j], u[(i, j)], exact[(i, j)], err[(i, j)]])
    });
    art.write(
        &ctx.out,
        "mms_field.csv",
        &output::csv_string(&["x", "mu", "u", "exact", "error"], rows),
    )?;
    art.write_json(
        &ctx.out,
        "mms_errors.json",
        &json!({ "case": case.name, "cells": sol.grid.n_cells(), "l2": l2, "l1": l1, "max": max }),
    )?;
    println!(
        "manufactured case {}: cells {}",
        case.name,
        sol.grid.n_cells()
    );
    println!("  error  L2 {l2:.6e}  L1 {l1:.6e}  max {max:.6e}");
    Ok(())
}

fn constant_value(p: &Profile) -> Option<f64> {
    match p {
        Profile::Constant { value } => Some(*value),
        _ => None,
    }
}

fn solve_diffusion_cmd(ctx: &Context) -> Result<()> {
    let Loaded { text, cfg } = load(ctx)?;
    let problem = cfg.problem()?;
    let factor = velocity_factor(&cfg, &problem)?;
    let coef = LimitCoefficient::Factor(factor);
    let length = problem.grid.length();
    let mut summary = json!({ "cells": problem.grid.n_cells(), "velocity_factor": factor });
    let sol: DiffusionSolution;
    let mut reference: Option<Box<dyn Fn(f64) -> f64>> = None;
    match (cfg.manufactured_case(), manufactured(&cfg)) {
        (Some("constant-coefficient"), _) => {
            let c = |f: &difflim::problem::CoefficientField| {
                constant_value(f.profile()).map(|v| v * f.factor())
            };
            let (Some(s), Some(g), Some(f)) =
                (c(&problem.sigma), c(&problem.gamma), c(&problem.source))
            else {
                return Err(Error::Validation(
                    "the constant-coefficient reference needs constant sigma, gamma and source"
                        .into(),
                ));
            };
            sol = solve_diffusion(&problem, &coef)?;
            reference = Some(Box::new(cosh_reference(factor / s, g, f, length)));
            summary["case"] = json!("constant-coefficient");
        }
        (_, Some(case)) => {
            let f = mms_diffusion_source(&case, &problem.sigma, &problem.gamma, factor, length);
            sol = solve_diffusion_with_source(&problem, &coef, &f)?;
            let c2 = case.clone();
            reference = Some(Box::new(move |x| c2.spatial(x, length).0));
            summary["case"] = json!(case.name);
        }
        _ => sol = solve_diffusion(&problem, &coef)?,
    }
    let mut art = Artifacts::default();
    art.write(&ctx.out, "diffusion.csv", &output::diffusion_csv(&sol))?;
    art.write(
        &ctx.out,
        "diffusion_nodes.csv",
        &output::diffusion_nodes_csv(&sol),
    )?;
    let u_max = sol.u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!(
        "diffusion limit: {} cells, max |u0| {u_max:.6e}",
        sol.grid.n_cells()
    );
    if let Some(r) = reference {
        let err = sol
            .nodes
            .iter()
            .zip(&sol.u0)
            .map(|(x, u)| (u - r(*x)).abs())
            .fold(0.0, f64::max);
        summary["max_nodal_error"] = json!(err);
        println!("  max nodal error {err:.6e}");
    }
    art.write_json(&ctx.out, "diffusion_summary.json", &summary)?;
    art.finish(&ctx.out, &text, &ctx.argv)
}

fn write_study(
    art: &mut Artifacts,
    out: &Path,
    report: &ConvergenceReport,
    status: &str,
) -> Result<()> {
    art.write(out, "report.csv", &output::report_csv(report))?;
    art.write_json(
        out,
        "slopes.json",
        &json!({
            "status": status,
            "slopes": to_json(&report.slopes)?,
            "deriv_variation": report.deriv_variation,
            "err_total_decreasing": report.err_total_decreasing,
            "smooth": report.smooth,
            "notes": report.notes,
            "c_K": report.c_k,
            "diffusion_factor": report.diffusion_factor,
            "ordinates": report.ordinates,
        }),
    )?;
    art.write_json(out, "records.json", &to_json(&report.records)?)?;
    if let Some(t) = &report.apriori {
        art.write_json(out, "apriori.json", &to_json(t)?)?;
    }
    if report.records.len() >= 2 {
        for (name, text) in output::report_plots(report) {
            art.write(out, &format!("plot_{name}.dat"), &text)?;
        }
    }
    Ok(())
}

fn print_study(report: &ConvergenceReport) {
    println!(
        "{:>10} {:>6} {:>11} {:>11} {:>11} {:>11} {:>11}",
        "eps", "cells", "err_total", "err_fluct", "bdry", "deriv", "remainder"
    );
    for r in &report.records {
        println!(
            "{:>10.4e} {:>6} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e} {:>11.4e}",
            r.eps, r.cells, r.err_total, r.err_fluct, r.bdry, r.deriv, r.remainder
        );
    }
    for s in &report.slopes {
        if let Some(v) = s.slope {
            let verdict = match s.within_window {
                Some(true) => " (within window)",
                Some(false) => " (outside window)",
                None => "",
            };
            println!(
                "slope {:<10} {v:.4} +- {:.4}{verdict}",
                s.quantity,
                s.stderr.unwrap_or(0.0)
            );
        }
    }
    for n in &report.notes {
        println!("note: {n}");
    }
}

pub fn study(ctx: &Context) -> Result<()> {
    let Loaded { text, cfg } = load(ctx)?;
    let section = cfg
        .study
        .clone()
        .ok_or_else(|| Error::Config("the study command needs a [study] section".into()))?;
    let problem = cfg.problem()?;
    let q = cfg.quadrature()?;
    let options = StudyOptions {
        eps_list: section.eps_list()?,
        lp: if section.lp {
            vec![1.0, 4.0]
        } else {
            Vec::new()
        },
        min_cells: section.min_cells,
        cells_per_eps: section.cells_per_eps,
        solver: cfg.solver,
        jobs: ctx.jobs,
    };
    let mut art = Artifacts::default();
    match convergence_study(&problem, &q, &options) {
        Ok(report) => {
            write_study(&mut art, &ctx.out, &report, "complete")?;
            print_study(&report);
            art.finish(&ctx.out, &text, &ctx.argv)
        }
        Err(Error::StudyAborted {
            eps,
            partial,
            source,
        }) => {
            write_study(&mut art, &ctx.out, &partial, "aborted")?;
            art.finish(&ctx.out, &text, &ctx.argv)?;
            Err(Error::StudyAborted {
                eps,
                partial,
                source,
            })
        }
        Err(e) => Err(e),
    }
}
