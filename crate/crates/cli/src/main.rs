//! `aloha`: throughput, equilibria, simulation, update dynamics and CSI
//! paradox sweeps for slotted ALOHA with capture, driven by a TOML scenario.
//!
//! Exit codes: 0 success, 2 configuration error, 3 infeasible demands,
//! 4 non-convergence.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use aloha_core::Error;
use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "aloha", version, about = "Slotted-ALOHA capture game toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analytic per-node throughput at the given probabilities.
    Throughput(Common),
    /// Nash equilibria for the configured demands.
    Solve(Common),
    /// Slot-level Monte Carlo run.
    Simulate(Common),
    /// Distributed probability-update trace.
    Dynamics(Common),
    /// CSI versus no-CSI throughput curves.
    Paradox(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated transmission probabilities overriding the file.
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Probability grid for `paradox`, as start:stop:count.
    #[arg(long)]
    pub grid: Option<String>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Override `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the parsed scenario (after overrides) and exit.
    #[arg(long)]
    pub dump_config: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_infeasible() => 3,
        Some(Error::NonConvergence { .. } | Error::Quadrature { .. }) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Throughput(c) => commands::run(commands::Kind::Throughput, c),
        Command::Solve(c) => commands::run(commands::Kind::Solve, c),
        Command::Simulate(c) => commands::run(commands::Kind::Simulate, c),
        Command::Dynamics(c) => commands::run(commands::Kind::Dynamics, c),
        Command::Paradox(c) => commands::run(commands::Kind::Paradox, c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
