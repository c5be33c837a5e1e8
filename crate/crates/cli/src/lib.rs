//! Command-line front end: configuration files, dataset export, run
//! manifests and the experiment harnesses.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for bad configuration or
//! input.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use log::error;

pub use error::{CliError, CliResult};

/// Environment variable capping the worker pool size.
pub const THREADS_ENV: &str = "HAWKS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "evoclust", version, about = "Evolve synthetic clustering benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve datasets from a JSON config (index or versus mode, optional sweep).
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Runs per configuration; overrides `num_runs`.
        #[arg(long)]
        runs: Option<usize>,
        /// Base seed; overrides `seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Head-to-head runs; also writes results.csv and grid_summary.csv.
    Versus {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Features and per-algorithm ARI for every dataset matching a glob.
    Analyze {
        /// Glob of dataset CSVs, e.g. 'out/dataset_*.csv'.
        pattern: String,
        #[arg(long)]
        out: PathBuf,
        /// Also score both linkages cut at twice the true cluster count.
        #[arg(long = "linkage-2k")]
        linkage_2k: bool,
        /// Seed for the stochastic clusterers.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Two-dimensional PCA projection of one or more feature tables.
    InstanceSpace {
        /// Feature CSVs written by `analyze`.
        #[arg(required = true)]
        features: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean-operator convergence traces across four scenarios and two dimensions.
    OperatorStudy {
        #[arg(long)]
        out: PathBuf,
        /// Seeds per operator, scenario and dimension.
        #[arg(long, default_value_t = 30)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Generate {
            config,
            out,
            runs,
            seed,
        } => {
            commands::generate(&commands::RunOptions {
                config,
                out,
                runs,
                seed,
            })?;
        }
        Command::Versus {
            config,
            out,
            runs,
            seed,
        } => {
            commands::versus(&commands::RunOptions {
                config,
                out,
                runs,
                seed,
            })?;
        }
        Command::Analyze {
            pattern,
            out,
            linkage_2k,
            seed,
        } => {
            commands::analyze(&commands::AnalyzeOptions {
                pattern,
                out,
                linkage_2k,
                seed,
            })?;
        }
        Command::InstanceSpace { features, out } => {
            commands::instance_space(&commands::InstanceSpaceOptions { features, out })?;
        }
        Command::OperatorStudy { out, runs, seed } => {
            if runs == 0 {
                return Err(CliError::input("--runs must be at least 1"));
            }
            let mut opts = commands::OperatorStudyOptions::new(out);
            opts.runs = runs;
            opts.seed = seed;
            commands::operator_study(&opts)?;
        }
    }
    Ok(())
}

/// Reads the thread cap from the environment; `None` when unset.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::input(format!("{THREADS_ENV}: {e}"))),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(CliError::input(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with status 0; usage errors get 2.
            let _ = e.print();
            return if e.use_stderr() { CliError::EXIT_INPUT } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
