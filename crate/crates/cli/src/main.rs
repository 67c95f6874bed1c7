//! Command-line harness around the simulator: validate scenario files,
//! execute seeded runs, and sweep one axis, emitting CSV rows and summary
//! tables.
//!
//! Exit codes: 0 on success, 1 on configuration/validation errors, 2 on
//! runtime protocol errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use copac::harness::{
    emit_csv_path, emit_summary, render_sweep_summary, run_trials, sweep, HarnessError,
};
use copac::scenario::{Mode, ScenarioConfig};

/// Environment variable supplying the default master seed when --seed is
/// absent.
const SEED_ENV: &str = "COPAC_SEED";

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Headline constants (centralized round multiplier 150).
    PaperFaithful,
    /// Desk-scale constants for Monte-Carlo experiments (multiplier 10).
    Desk,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::PaperFaithful => Mode::PaperFaithful,
            ModeArg::Desk => Mode::Desk,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "copac",
    about = "Collaborative PAC learning protocol simulator"
)]
struct Cli {
    /// Master seed; overrides the scenario file and COPAC_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of trials; overrides the scenario file.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Write result rows as CSV to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Constant preset.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Desk)]
    mode: ModeArg,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute the scenario's trials and print a summary table.
    Run { config: PathBuf },
    /// Run every sweep value and print per-value means and ratios.
    Sweep { config: PathBuf },
    /// Load and validate a scenario file.
    Validate { config: PathBuf },
}

fn load_config(path: &std::path::Path, cli: &Cli) -> Result<ScenarioConfig, HarnessError> {
    let mut cfg = ScenarioConfig::load(path)?;
    let env_seed = std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.parse::<u64>().ok());
    if let Some(seed) = cli.seed.or(env_seed) {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), HarnessError> {
    let mode: Mode = cli.mode.into();
    match &cli.cmd {
        Cmd::Validate { config } => {
            let cfg = load_config(config, cli)?;
            cfg.validate()?;
            println!(
                "ok: {} with k={} players, epsilon={}, delta={}",
                cfg.algorithm.name(),
                cfg.players.len(),
                cfg.epsilon,
                cfg.delta
            );
            Ok(())
        }
        Cmd::Run { config } => {
            let cfg = load_config(config, cli)?;
            let rows = run_trials(&cfg, mode, cfg.trials)?;
            if let Some(path) = &cli.out {
                emit_csv_path(&rows, path)?;
                println!("wrote {} rows to {}", rows.len(), path.display());
            }
            print!("{}", emit_summary(&rows));
            Ok(())
        }
        Cmd::Sweep { config } => {
            let cfg = load_config(config, cli)?;
            let outcome = sweep(&cfg, mode, cfg.trials)?;
            if let Some(path) = &cli.out {
                emit_csv_path(&outcome.rows, path)?;
                println!("wrote {} rows to {}", outcome.rows.len(), path.display());
            }
            println!("sweep axis: {}", outcome.summary.axis);
            print!("{}", render_sweep_summary(&outcome.summary));
            print!("{}", emit_summary(&outcome.rows));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                HarnessError::Scenario(_) | HarnessError::SweepAxisMissing => ExitCode::from(1),
                HarnessError::Io(_) | HarnessError::Csv(_) => ExitCode::from(1),
                HarnessError::Protocol(_) | HarnessError::InvariantViolated(_) => ExitCode::from(2),
            }
        }
    }
}
