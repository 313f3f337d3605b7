use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tempart_cli::{execute, CliError, Command, FitOptions, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "tempart", version, about = "Temporal random partition models")]
struct Cli {
    /// JSON configuration (blocks: model, prior, mcmc, io).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides mcmc.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides io.out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Lagged-ARI surface of the prior over a grid of dependence values.
    SimulatePrior,
    /// Generate synthetic panels with known partitions.
    Synth,
    /// Fit the model (or all eight temporal variants) to a panel.
    Fit {
        /// Record wall time in run_meta.json; reruns are then not byte-identical.
        #[arg(long)]
        record_timing: bool,
    },
    /// Compare fitted chains and summarize their partitions.
    Report,
}

fn run(cli: Cli) -> Result<usize, CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.mcmc.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.io.out = out;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let command = match cli.command {
        Cmd::SimulatePrior => Command::SimulatePrior,
        Cmd::Synth => Command::Synth,
        Cmd::Fit { record_timing } => Command::Fit(FitOptions { record_timing }),
        Cmd::Report => Command::Report,
    };
    Ok(execute(command, &cfg)?.len())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(n) => {
            eprintln!("wrote {n} files");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
