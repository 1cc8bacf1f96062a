//! `difflim`: certify scattering kernels, dump diffusion tensors, run single solves
//! and epsilon sweeps from a TOML configuration.
//!
//! Exit codes: 0 success, 2 invalid input, 3 no convergence, 4 failed certification.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use difflim::Error;

#[derive(Debug, Parser)]
#[command(
    name = "difflim",
    version,
    about = "Slab transport in the diffusive scaling and its diffusion limit"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Worker threads for per-eps solves in studies.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the scattering operator against the structural assumptions.
    Certify,
    /// Write the per-cell diffusion tensor.
    Tensor,
    /// Solve once: transport at a given eps, or the diffusion limit.
    Solve {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, value_enum, default_value_t = Mode::Transport)]
        mode: Mode,
    },
    /// Run the epsilon sweep described in the `[study]` section.
    Study,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Transport,
    Diffusion,
}

fn exit_code(err: &Error) -> u8 {
    match err.root() {
        Error::Convergence { .. } => 3,
        Error::Certification(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config.clone() else {
        eprintln!("error: --config PATH is required\n\nUsage: difflim --config <PATH> <COMMAND>");
        return ExitCode::from(2);
    };
    let ctx = commands::Context {
        config_path: config,
        out: cli.out.clone(),
        jobs: cli.jobs.max(1),
        argv: std::env::args().collect(),
    };
    let result = match cli.command {
        Command::Certify => commands::certify(&ctx),
        Command::Tensor => commands::tensor(&ctx),
        Command::Solve { eps, mode } => commands::solve(&ctx, eps, mode),
        Command::Study => commands::study(&ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e.root(), Error::Io { .. } | Error::Config(_)) {
                eprintln!(
                    "\nUsage: difflim --config <PATH> [--out <DIR>] <certify|tensor|solve|study>"
                );
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
