//! Command-line driver: prior simulation, synthetic panels, model fitting
//! and reports. Every command is deterministic given its configuration and
//! seed, and writes its files atomically.

pub mod chain_files;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::path::PathBuf;

pub use commands::fit::FitOptions;
pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    SimulatePrior,
    Synth,
    Fit(FitOptions),
    Report,
}

/// Run one command; returns the files written.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    match command {
        Command::SimulatePrior => commands::simulate_prior::run(cfg),
        Command::Synth => commands::synth::run(cfg),
        Command::Fit(opts) => commands::fit::run(cfg, opts),
        Command::Report => commands::report::run(cfg),
    }
}
