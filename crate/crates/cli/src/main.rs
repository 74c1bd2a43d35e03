//! `rbl`: parameter studies for robust grand-bundle pricing.
//!
//! Exit codes: 0 success, 2 invalid settings or numerical error, 3 failed
//! acceptance check in `verify` (or a failed Monte Carlo / truthfulness check).

mod commands;
mod config;
mod members;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rbl_core::robust_solvers::Objective;

use crate::config::{ConfigError, GlobalArgs, RawSettings};

#[derive(Debug, Parser)]
#[command(name = "rbl", version, about = "Robust bundle pricing under mean and MAD ambiguity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Seller commits to a bundle price first; nature replies.
    Maximin,
    /// Nature commits to an i.i.d. two-point law first; the seller replies.
    Minimax,
    /// Ratio to the optimal mechanism: bound chain and empirical value.
    Ratio,
    /// Per-good regret against the optimal mechanism.
    Regret,
    /// Monte Carlo check of the concentration bound (needs --seed).
    Concentration,
    /// Constants of the min-max gap for mu < d < 2 mu.
    Xi,
    /// Optimal deterministic mechanism for a few goods, with a witness menu.
    OptOracle,
    /// Run the acceptance suite.
    Verify,
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("cannot start the thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

fn run(cli: Cli) -> Result<bool, RunError> {
    let raw = RawSettings::resolve(&cli.global)?;
    let format = raw.format()?;
    if let Some(threads) = raw.threads()? {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    let rendered = match cli.command {
        Command::Maximin => commands::saddle(&raw, Objective::Maximin, format)?,
        Command::Minimax => commands::saddle(&raw, Objective::Minimax, format)?,
        Command::Ratio => commands::ratio(&raw, format)?,
        Command::Regret => commands::regret(&raw, format)?,
        Command::Concentration => commands::concentration(&raw, format)?,
        Command::Xi => commands::xi(&raw, format)?,
        Command::OptOracle => commands::opt_oracle(&raw, format)?,
        Command::Verify => commands::verify(format),
    };
    match raw.out() {
        Some(path) => std::fs::write(&path, &rendered.text)
            .map_err(|source| RunError::Write { path: path.display().to_string(), source })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(rendered.text.as_bytes())
                .map_err(|source| RunError::Write { path: "stdout".into(), source })?;
        }
    }
    Ok(!rendered.failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
