//! Command-line front end: `simulate`, `jacobian`, `scan` and `selftest`.
//!
//! Exit codes: 0 success, 1 malformed JSON, 2 invalid config, 3 positivity
//! breach, 4 unstable fixed point, 5 Jacobian routes disagree or self-test
//! failure, 6 anything else.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::Common;
pub use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "gme", version, about = "Nonlinear master equation simulation and thermal fixed-point stability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a scenario and write trajectory.csv.
    Simulate(ScenarioArgs),
    /// Linearize at the thermal state; write jacobian.csv, spectrum.csv, diagonals.csv.
    Jacobian(ScenarioArgs),
    /// Run a sweep config point by point in parallel.
    Scan(ScenarioArgs),
    /// Run the built-in verification criteria.
    Selftest {
        #[arg(long, default_value_t = gme::selftest::DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// JSON config file.
    config: PathBuf,
    /// Output directory (overrides `outputs.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every random preset in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Largest allowed disagreement between Jacobian routes.
    #[arg(long)]
    tol: Option<f64>,
}

impl ScenarioArgs {
    fn common(&self) -> Common {
        Common { out: self.out.clone(), seed: self.seed, tol: self.tol }
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(&a.config, &a.common()),
        Command::Jacobian(a) => commands::jacobian(&a.config, &a.common()),
        Command::Scan(a) => commands::scan(&a.config, &a.common()),
        Command::Selftest { seed } => commands::selftest(*seed),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
