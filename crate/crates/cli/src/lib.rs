//! Command-line front end for `feynrec-core`: loads experiment configs, runs
//! the verification suites and renders text or JSONL reports.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::{ActionOptions, CliError, NdOptions, Options};
use report::RunReport;

/// Seed used when neither `--seed` nor `FEYNREC_SEED` is set.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "feynrec", version, about = "Checks Feynman's rules and the quantum formalism they reconstruct")]
pub struct Cli {
    /// Emit one JSON record per check instead of text.
    #[arg(long, global = true)]
    pub jsonl: bool,
    /// Skip unitarity checks while loading a config.
    #[arg(long, global = true)]
    pub no_validate: bool,
    /// Include elapsed times in the report.
    #[arg(long, global = true)]
    pub timings: bool,
    /// Master seed for every random draw.
    #[arg(long, global = true, env = "FEYNREC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Algebraic identities of the sequence operations, plus model unitarity.
    Validate {
        config: Option<PathBuf>,
        /// Random operand tuples per identity.
        #[arg(long, default_value_t = 1000)]
        tuples: usize,
    },
    /// Amplitude and probability of a declared sequence.
    Amplitude { config: PathBuf, sequence: String },
    /// No-disturbance check for declared scenarios.
    CheckNd {
        config: PathBuf,
        #[arg(long)]
        scenario: Option<String>,
        /// Largest accepted change in any outcome probability.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Also sample this many Monte-Carlo runs.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// States, operators, evolution and composites of a model.
    Reconstruct { config: PathBuf },
    /// Axiom table for the composite-amplitude candidates.
    CheckComposition {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Action additivity, the amplitude map and the lattice propagator.
    Action {
        /// Read the Lagrangian and lattice from a config instead.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, requires = "config")]
        scenario: Option<String>,
        /// `free` or `harmonic`.
        #[arg(long, default_value = "free")]
        lagrangian: String,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 101)]
        sites: usize,
        #[arg(long, default_value_t = 8)]
        steps: usize,
        /// `periodic` or `open`.
        #[arg(long, default_value = "periodic")]
        boundary: String,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        time_step: Option<f64>,
        /// Random paths for the additivity checks.
        #[arg(long, default_value_t = 1000)]
        paths: usize,
    },
}

/// Runs the parsed command.
pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let opts = Options {
        validate: !cli.no_validate,
        seed: cli.seed,
    };
    let mut report = match &cli.command {
        Command::Validate { config, tuples } => commands::validate(config.as_deref(), *tuples, opts)?,
        Command::Amplitude { config, sequence } => commands::amplitude_cmd(config, sequence, opts)?,
        Command::CheckNd { config, scenario, tol, runs } => {
            if !(*tol >= 0.0) {
                return Err(CliError::Usage("--tol must be non-negative".into()));
            }
            if *runs == Some(0) {
                return Err(CliError::Usage("--runs must be positive".into()));
            }
            commands::check_nd(config, scenario.as_deref(), NdOptions { tol: *tol, runs: *runs }, opts)?
        }
        Command::Reconstruct { config } => commands::reconstruct(config, opts)?,
        Command::CheckComposition { samples } => commands::check_composition(*samples, opts)?,
        Command::Action {
            config,
            scenario,
            lagrangian,
            mass,
            omega,
            alpha,
            sites,
            steps,
            boundary,
            spacing,
            time_step,
            paths,
        } => {
            let a = match config {
                Some(path) => commands::action_from_config(path, scenario.as_deref(), *paths, opts)?,
                None => {
                    let functional = config::functional("--lagrangian", lagrangian, *mass, *omega)?;
                    let scale = feynrec_core::action::ActionScale::new(*alpha)?;
                    let grid = config::lattice(
                        "--sites/--steps",
                        &functional,
                        scale,
                        *sites,
                        *steps,
                        Some(boundary),
                        *spacing,
                        *time_step,
                    )?;
                    ActionOptions {
                        functional,
                        scale,
                        grid,
                        steps: *steps,
                        paths: *paths,
                    }
                }
            };
            commands::action_cmd(&a, opts)?
        }
    };
    if !cli.timings {
        report.strip_timings();
    }
    Ok(report)
}
