//! Model comparison and partition summaries for fitted chains.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempart_core::selection::Interval;
use tempart_core::{estimate_report, ChainOutput, EstimateReport, PartitionLoss};

use crate::chain_files::{self, RunMeta};
use crate::commands::fit::data_path;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{read_panel, to_json_bytes, write_all, Panel};

pub const COMPARISON_FILE: &str = "model_comparison.csv";
pub const REPORT_FILE: &str = "report.json";
pub const LAGGED_ARI_FILE: &str = "lagged_ari.csv";
pub const LABELS_FILE: &str = "estimated_labels.csv";
pub const INTERVALS_FILE: &str = "intervals.csv";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelRow {
    pub model: String,
    pub waic: f64,
    pub lpml: f64,
    /// Present only when more than one model is compared.
    pub best_waic: Option<bool>,
    pub best_lpml: Option<bool>,
}

/// Flag the lowest WAIC and the highest LPML (ties share the flag).
pub fn compare(rows: &mut [ModelRow]) {
    if rows.len() < 2 {
        for r in rows.iter_mut() {
            r.best_waic = None;
            r.best_lpml = None;
        }
        return;
    }
    let best_waic = rows.iter().map(|r| r.waic).filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
    let best_lpml = rows.iter().map(|r| r.lpml).filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    for r in rows.iter_mut() {
        r.best_waic = Some(r.waic == best_waic);
        r.best_lpml = Some(r.lpml == best_lpml);
    }
}

pub fn comparison_csv(rows: &[ModelRow]) -> Vec<u8> {
    let flags = rows.iter().any(|r| r.best_waic.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["model", "waic", "lpml"];
    if flags {
        header.extend(["best_waic", "best_lpml"]);
    }
    w.write_record(&header).expect("in-memory write");
    for r in rows {
        let mut rec = vec![r.model.clone(), r.waic.to_string(), r.lpml.to_string()];
        if flags {
            rec.push(r.best_waic.unwrap_or(false).to_string());
            rec.push(r.best_lpml.unwrap_or(false).to_string());
        }
        w.write_record(&rec).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

#[derive(Debug, Serialize)]
struct ModelSummary<'a> {
    model: &'a str,
    chain_dir: String,
    n_draws: usize,
    waic: f64,
    lpml: f64,
    best_waic: Option<bool>,
    best_lpml: Option<bool>,
    /// Mean ARI of the estimates `lag` apart, lag = 1, 2, ...
    mean_lagged_ari: Vec<f64>,
    /// 1-based cluster labels per time point.
    estimates: Vec<Vec<usize>>,
    intervals: &'a [Interval],
}

#[derive(Debug, Serialize)]
struct ReportJson<'a> {
    loss: PartitionLoss,
    refine: bool,
    models: Vec<ModelSummary<'a>>,
}

fn model_files(report: &EstimateReport, panel: &Panel) -> Vec<(PathBuf, Vec<u8>)> {
    let n_times = report.estimates.len();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "t", "ari"]).expect("in-memory write");
    for s in 0..n_times {
        for t in 0..n_times {
            w.write_record([(s + 1).to_string(), (t + 1).to_string(), report.lagged_ari[s][t].to_string()])
                .expect("in-memory write");
        }
    }
    let lagged = w.into_inner().expect("in-memory write");

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["unit", "t", "label"]).expect("in-memory write");
    for (i, id) in panel.unit_ids.iter().enumerate() {
        for (t, est) in report.estimates.iter().enumerate() {
            w.write_record([id.clone(), panel.time_ids[t].clone(), (est.label(i) + 1).to_string()])
                .expect("in-memory write");
        }
    }
    let labels = w.into_inner().expect("in-memory write");

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "index", "mean", "lower", "upper"]).expect("in-memory write");
    for iv in report.intervals.iter().chain(&report.mu_intervals) {
        let index: Vec<String> = iv.index.iter().map(usize::to_string).collect();
        w.write_record([
            iv.name.clone(),
            index.join(":"),
            iv.mean.to_string(),
            iv.lower.to_string(),
            iv.upper.to_string(),
        ])
        .expect("in-memory write");
    }
    let intervals = w.into_inner().expect("in-memory write");
    vec![
        (PathBuf::from(LAGGED_ARI_FILE), lagged),
        (PathBuf::from(LABELS_FILE), labels),
        (PathBuf::from(INTERVALS_FILE), intervals),
    ]
}

/// Names for the chains: the fitted variant name, falling back to the
/// directory name (then a position suffix) when names collide.
fn model_names(metas: &[(PathBuf, RunMeta)]) -> Vec<String> {
    let mut names: Vec<String> = metas.iter().map(|(_, m)| m.model.clone()).collect();
    let distinct: BTreeSet<&String> = names.iter().collect();
    if distinct.len() < names.len() {
        names = metas
            .iter()
            .enumerate()
            .map(|(k, (dir, m))| {
                let base = dir.file_name().map(|s| s.to_string_lossy().into_owned());
                format!("{}@{}", m.model, base.unwrap_or_else(|| (k + 1).to_string()))
            })
            .collect();
        let distinct: BTreeSet<&String> = names.iter().collect();
        if distinct.len() < names.len() {
            names = names.iter().enumerate().map(|(k, n)| format!("{n}#{}", k + 1)).collect();
        }
    }
    names
}

pub fn load_chains(dirs: &[PathBuf], panel: &Panel) -> Result<Vec<(PathBuf, RunMeta, ChainOutput)>> {
    dirs.iter()
        .map(|dir| {
            let (meta, chain) = chain_files::load(dir)?;
            if meta.m != panel.m() || meta.n_times != panel.n_times() {
                return Err(CliError::Data(format!(
                    "{}: chain has {} units x {} time points, dataset has {} x {}",
                    dir.display(),
                    meta.m,
                    meta.n_times,
                    panel.m(),
                    panel.n_times()
                )));
            }
            Ok((dir.clone(), meta, chain))
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if cfg.io.chains.is_empty() {
        return Err(CliError::Config("io.chains lists no chain directories".into()));
    }
    let panel = read_panel(data_path(cfg)?)?;
    let chains = load_chains(&cfg.io.chains, &panel)?;
    let (loss, refine) = (cfg.model.loss, cfg.model.refine);
    let reports: Vec<EstimateReport> = chains
        .iter()
        .map(|(_, _, c)| estimate_report(c, loss, refine).map_err(CliError::data))
        .collect::<Result<_>>()?;
    let metas: Vec<(PathBuf, RunMeta)> = chains.iter().map(|(d, m, _)| (d.clone(), m.clone())).collect();
    let names = model_names(&metas);
    let mut rows: Vec<ModelRow> = names
        .iter()
        .zip(&reports)
        .map(|(n, r)| ModelRow {
            model: n.clone(),
            waic: r.waic,
            lpml: r.lpml,
            best_waic: None,
            best_lpml: None,
        })
        .collect();
    compare(&mut rows);

    let mut files = vec![(PathBuf::from(COMPARISON_FILE), comparison_csv(&rows))];
    let mut models = Vec::new();
    for (k, report) in reports.iter().enumerate() {
        let prefix = Path::new(&names[k]);
        files.extend(
            model_files(report, &panel)
                .into_iter()
                .map(|(n, b)| (prefix.join(n), b)),
        );
        let t = report.estimates.len();
        models.push(ModelSummary {
            model: &names[k],
            chain_dir: chains[k].0.display().to_string(),
            n_draws: chains[k].2.n_draws(),
            waic: report.waic,
            lpml: report.lpml,
            best_waic: rows[k].best_waic,
            best_lpml: rows[k].best_lpml,
            mean_lagged_ari: (1..t).filter_map(|l| report.mean_lagged_ari(l)).collect(),
            estimates: report.estimates.iter().map(|p| p.one_based()).collect(),
            intervals: &report.intervals,
        });
    }
    let json = ReportJson { loss, refine, models };
    files.push((PathBuf::from(REPORT_FILE), to_json_bytes(&json)));
    write_all(&cfg.io.out, &files)
}
