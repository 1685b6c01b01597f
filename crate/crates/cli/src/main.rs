//! Command-line front end: run any of the five models from a scenario
//! file, compare model pairs against their structural identities, print
//! the equilibrium report, or check the operator derivative.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error
//! (extinction or positivity), 3 I/O error, 4 identity violated.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use immunokinetics_core::Error as CoreError;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: msg.into(),
        }
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: msg.into(),
        }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: msg.into(),
        }
    }

    pub fn identity(msg: impl Into<String>) -> Self {
        Self {
            code: 4,
            message: msg.into(),
        }
    }

    /// Core errors raised while assembling a model are configuration
    /// problems.
    pub fn from_core_config(e: CoreError) -> Self {
        Self::config(e.to_string())
    }

    /// Core errors raised mid-run: extinction and positivity failures are
    /// runtime errors, everything else is a configuration problem.
    pub fn from_core_run(e: CoreError) -> Self {
        match e {
            CoreError::Extinction { .. } | CoreError::PositivityViolated { .. } => {
                Self::runtime(e.to_string())
            }
            other => Self::config(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    M1,
    M2,
    Mol,
    SirsDde,
    SisDde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairArg {
    M1VsSirsDde,
    M2VsOracle,
    M2VsSisDde,
    MolTheta0VsM2,
}

#[derive(Parser)]
#[command(
    name = "immunokinetics",
    about = "Immunity-structured SIRS models: simulation, comparison, and verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one model and write timeseries.csv (and density.csv for the
    /// structured models).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[arg(long)]
        out: PathBuf,
        /// Override run.dt from the scenario file.
        #[arg(long)]
        dt: Option<f64>,
        /// Override grid.n_cells (structured models only).
        #[arg(long)]
        grid_cells: Option<usize>,
        /// Override run.t_end.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Run a model pair and check the identity connecting them.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        pair: PairArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the disease-free equilibrium report.
    Equilibria {
        #[arg(long)]
        config: PathBuf,
    },
    /// Finite-difference check of the operator derivative.
    CheckOperator {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Parallelism cap from the environment (default 1): with 2 or more, the
/// compare command runs its two models concurrently.
pub fn thread_budget() -> usize {
    std::env::var("IMMUNOKINETICS_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate {
            config,
            model,
            out,
            dt,
            grid_cells,
            t_end,
        } => commands::simulate::run(&config, model, &out, dt, grid_cells, t_end),
        Command::Compare { config, pair, out } => commands::compare::run(&config, pair, &out),
        Command::Equilibria { config } => commands::equilibria::run(&config),
        Command::CheckOperator { config, seed } => commands::check_operator::run(&config, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
