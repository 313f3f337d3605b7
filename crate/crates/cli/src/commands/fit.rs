//! Posterior sampling for one model variant or all eight.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use tempart_core::gibbs::run_chain_with;
use tempart_core::{ChainOutput, Toggles};

use crate::chain_files::{render, RunMeta};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{read_panel, write_all, Panel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FitOptions {
    /// Store elapsed seconds in `run_meta.json` (breaks byte-identical reruns).
    pub record_timing: bool,
}

pub struct FittedChain {
    pub model: String,
    pub toggles: Toggles,
    pub output: ChainOutput,
    pub seconds: f64,
}

pub fn data_path(cfg: &RunConfig) -> Result<&Path> {
    cfg.io
        .data
        .as_deref()
        .ok_or_else(|| CliError::Config("io.data (the panel CSV) is required".into()))
}

/// Fit every configured variant in parallel. All variants run on chain
/// stream 0, so a single-variant fit reproduces the same variant of a full
/// run.
pub fn fit_panel(cfg: &RunConfig, panel: &Panel) -> Result<Vec<FittedChain>> {
    let data = panel.to_dataset()?;
    let pooled_sd = data.pooled_sd();
    cfg.variants()
        .into_par_iter()
        .map(|toggles| {
            let config = cfg.model_config(toggles, pooled_sd);
            let start = Instant::now();
            let output = run_chain_with(&data, &config, 0, |_| {}).map_err(CliError::config)?;
            Ok(FittedChain {
                model: toggles.name(),
                toggles,
                output,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

pub fn run(cfg: &RunConfig, opts: FitOptions) -> Result<Vec<PathBuf>> {
    let panel = read_panel(data_path(cfg)?)?;
    let fitted = fit_panel(cfg, &panel)?;
    let nested = fitted.len() > 1;
    let mut files = Vec::new();
    for f in &fitted {
        let mut meta = RunMeta::new(&f.model, 0, &f.output, &panel.unit_ids, &panel.time_ids);
        if opts.record_timing {
            meta.wall_time_secs = Some(f.seconds);
        }
        let prefix = if nested { PathBuf::from(&f.model) } else { PathBuf::new() };
        files.extend(
            render(&f.output, &meta)
                .into_iter()
                .map(|(name, bytes)| (prefix.join(name), bytes)),
        );
    }
    write_all(&cfg.io.out, &files)
}
