//! On-disk layout of one fitted chain.
//!
//! | file | layout |
//! |---|---|
//! | `partitions.csv` | one row per saved iterate; columns `t{t}_u{i}`, 1-based canonical labels |
//! | `gammas.csv` | as above with 0/1 indicators |
//! | `mu.csv`, `sigma.csv` | as above with unit-level atom values |
//! | `params.csv` | long: `iterate,name,index,value` |
//! | `loglik.csv` | long: `iterate,unit,t,value` |
//! | `run_meta.json` | configuration, seed, acceptance counts, identifiers |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempart_core::gibbs::{Acceptance, Draw};
use tempart_core::{ChainOutput, ModelConfig, Partition};

use crate::error::{CliError, Result};

pub const PARTITIONS: &str = "partitions.csv";
pub const GAMMAS: &str = "gammas.csv";
pub const MU: &str = "mu.csv";
pub const SIGMA: &str = "sigma.csv";
pub const PARAMS: &str = "params.csv";
pub const LOGLIK: &str = "loglik.csv";
pub const RUN_META: &str = "run_meta.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model: String,
    pub version: String,
    pub m: usize,
    pub n_times: usize,
    pub n_draws: usize,
    pub seed: u64,
    pub chain: u64,
    pub unit_ids: Vec<String>,
    pub time_ids: Vec<String>,
    pub config: ModelConfig,
    pub acceptance: Acceptance,
    /// Accepted fraction per random-walk block; absent when never proposed.
    pub acceptance_rates: BTreeMap<String, Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

impl RunMeta {
    pub fn new(model: &str, chain_index: u64, out: &ChainOutput, unit_ids: &[String], time_ids: &[String]) -> Self {
        let a = &out.acceptance;
        let acceptance_rates = [
            ("sigma", a.sigma),
            ("tau", a.tau),
            ("phi1", a.phi1),
            ("lambda", a.lambda),
            ("xi", a.xi),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.rate()))
        .collect();
        RunMeta {
            model: model.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            m: out.m,
            n_times: out.n_times,
            n_draws: out.draws.len(),
            seed: out.seed,
            chain: chain_index,
            unit_ids: unit_ids.to_vec(),
            time_ids: time_ids.to_vec(),
            config: out.config.clone(),
            acceptance: out.acceptance,
            acceptance_rates,
            wall_time_secs: None,
        }
    }
}

fn wide_header(m: usize, n_times: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(1 + m * n_times);
    h.push("iterate".to_string());
    for t in 1..=n_times {
        for i in 1..=m {
            h.push(format!("t{t}_u{i}"));
        }
    }
    h
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

/// Render a chain as `(file name, contents)` pairs.
pub fn render(out: &ChainOutput, meta: &RunMeta) -> Vec<(PathBuf, Vec<u8>)> {
    let (m, n_times) = (out.m, out.n_times);
    let header = wide_header(m, n_times);
    let wide = |f: &dyn Fn(&Draw, usize, usize) -> String| {
        csv_bytes(
            &header,
            out.draws.iter().map(|d| {
                let mut row = Vec::with_capacity(1 + m * n_times);
                row.push(d.iteration.to_string());
                for t in 0..n_times {
                    for i in 0..m {
                        row.push(f(d, i, t));
                    }
                }
                row
            }),
        )
    };
    let partitions = wide(&|d, i, t| (d.partitions[t].label(i) + 1).to_string());
    let gammas = wide(&|d, i, t| u8::from(d.gammas[t][i]).to_string());
    let mu = wide(&|d, i, t| d.mu[i * n_times + t].to_string());
    let sigma = wide(&|d, i, t| d.sigma[i * n_times + t].to_string());

    let long_header: Vec<String> = ["iterate", "name", "index", "value"].map(String::from).to_vec();
    let params = csv_bytes(
        &long_header,
        out.draws.iter().flat_map(|d| {
            let it = d.iteration.to_string();
            let mut rows: Vec<Vec<String>> = Vec::new();
            let mut push = |name: &str, index: usize, v: f64| {
                rows.push(vec![it.clone(), name.to_string(), index.to_string(), v.to_string()]);
            };
            for t in 1..n_times {
                push("alpha", t + 1, d.alpha[t]);
            }
            for (t, v) in d.theta.iter().enumerate() {
                push("theta", t + 1, *v);
            }
            push("tau", 1, d.tau);
            push("phi0", 1, d.phi0);
            push("phi1", 1, d.phi1);
            push("lambda", 1, d.lambda);
            for (i, v) in d.eta.iter().enumerate() {
                push("eta", i + 1, *v);
            }
            rows
        }),
    );
    let ll_header: Vec<String> = ["iterate", "unit", "t", "value"].map(String::from).to_vec();
    let loglik = csv_bytes(
        &ll_header,
        out.draws.iter().flat_map(|d| {
            (0..m).flat_map(move |i| {
                (0..n_times).map(move |t| {
                    vec![
                        d.iteration.to_string(),
                        (i + 1).to_string(),
                        (t + 1).to_string(),
                        d.loglik[i * n_times + t].to_string(),
                    ]
                })
            })
        }),
    );
    vec![
        (PathBuf::from(PARTITIONS), partitions),
        (PathBuf::from(GAMMAS), gammas),
        (PathBuf::from(MU), mu),
        (PathBuf::from(SIGMA), sigma),
        (PathBuf::from(PARAMS), params),
        (PathBuf::from(LOGLIK), loglik),
        (PathBuf::from(RUN_META), crate::io::to_json_bytes(meta)),
    ]
}

fn bad(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {msg}", path.display()))
}

fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<csv::StringRecord>)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(path, e))?;
    let header = r.headers().map_err(|e| bad(path, e))?.iter().map(String::from).collect();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>().map_err(|e| bad(path, e))?;
    Ok((header, rows))
}

fn num<T: std::str::FromStr>(path: &Path, line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| bad(path, format!("line {line}: cannot parse `{s}`")))
}

/// Wide file as `values[draw][t][i]` plus iterates.
fn read_wide<T: std::str::FromStr>(path: &Path, m: usize, n_times: usize) -> Result<(Vec<usize>, Vec<Vec<Vec<T>>>)> {
    let (header, rows) = read_rows(path)?;
    if header != wide_header(m, n_times) {
        return Err(bad(path, format!("columns do not match {m} units and {n_times} time points")));
    }
    let mut iterates = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        let line = k + 2;
        iterates.push(num(path, line, &r[0])?);
        let mut by_t = Vec::with_capacity(n_times);
        for t in 0..n_times {
            let row = (0..m)
                .map(|i| num(path, line, &r[1 + t * m + i]))
                .collect::<Result<Vec<T>>>()?;
            by_t.push(row);
        }
        values.push(by_t);
    }
    Ok((iterates, values))
}

/// Read a chain directory written by [`render`].
pub fn load(dir: &Path) -> Result<(RunMeta, ChainOutput)> {
    let meta_path = dir.join(RUN_META);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| CliError::io(&meta_path, e))?;
    let meta: RunMeta = serde_json::from_str(&text).map_err(|e| bad(&meta_path, e))?;
    let (m, n_times) = (meta.m, meta.n_times);

    let (iterates, labels) = read_wide::<usize>(&dir.join(PARTITIONS), m, n_times)?;
    let n = iterates.len();
    if n != meta.n_draws {
        return Err(bad(&dir.join(PARTITIONS), format!("{n} draws, run_meta says {}", meta.n_draws)));
    }
    let check_iterates = |path: &Path, other: &[usize]| -> Result<()> {
        if other != iterates.as_slice() {
            return Err(bad(path, "iterates differ from partitions.csv"));
        }
        Ok(())
    };
    let (it, gammas) = read_wide::<u8>(&dir.join(GAMMAS), m, n_times)?;
    check_iterates(&dir.join(GAMMAS), &it)?;
    let (it, mu) = read_wide::<f64>(&dir.join(MU), m, n_times)?;
    check_iterates(&dir.join(MU), &it)?;
    let (it, sigma) = read_wide::<f64>(&dir.join(SIGMA), m, n_times)?;
    check_iterates(&dir.join(SIGMA), &it)?;

    let mut draws: Vec<Draw> = Vec::with_capacity(n);
    let index_of: BTreeMap<usize, usize> = iterates.iter().enumerate().map(|(k, &it)| (it, k)).collect();
    for k in 0..n {
        let partitions = labels[k]
            .iter()
            .map(|l| Partition::canonicalize(l).map_err(|e| bad(&dir.join(PARTITIONS), e)))
            .collect::<Result<Vec<_>>>()?;
        let row_major = |v: &Vec<Vec<f64>>| -> Vec<f64> {
            (0..m).flat_map(|i| (0..n_times).map(move |t| v[t][i])).collect()
        };
        draws.push(Draw {
            iteration: iterates[k],
            partitions,
            gammas: gammas[k].iter().map(|g| g.iter().map(|&b| b == 1).collect()).collect(),
            alpha: vec![0.0; n_times],
            theta: vec![f64::NAN; n_times],
            tau: f64::NAN,
            phi0: f64::NAN,
            phi1: f64::NAN,
            lambda: f64::NAN,
            eta: vec![f64::NAN; m],
            mu: row_major(&mu[k]),
            sigma: row_major(&sigma[k]),
            loglik: vec![f64::NAN; m * n_times],
        });
    }

    let params_path = dir.join(PARAMS);
    let (header, rows) = read_rows(&params_path)?;
    if header != ["iterate", "name", "index", "value"] {
        return Err(bad(&params_path, "unexpected header"));
    }
    for (k, r) in rows.iter().enumerate() {
        let line = k + 2;
        let it: usize = num(&params_path, line, &r[0])?;
        let idx: usize = num(&params_path, line, &r[2])?;
        let v: f64 = num(&params_path, line, &r[3])?;
        let d = index_of
            .get(&it)
            .map(|&k| &mut draws[k])
            .ok_or_else(|| bad(&params_path, format!("line {line}: unknown iterate {it}")))?;
        let out_of_range = || bad(&params_path, format!("line {line}: index {idx} out of range"));
        let slot = match &r[1] {
            "alpha" => d.alpha.get_mut(idx.wrapping_sub(1)).ok_or_else(out_of_range)?,
            "theta" => d.theta.get_mut(idx.wrapping_sub(1)).ok_or_else(out_of_range)?,
            "eta" => d.eta.get_mut(idx.wrapping_sub(1)).ok_or_else(out_of_range)?,
            "tau" => &mut d.tau,
            "phi0" => &mut d.phi0,
            "phi1" => &mut d.phi1,
            "lambda" => &mut d.lambda,
            other => return Err(bad(&params_path, format!("line {line}: unknown parameter `{other}`"))),
        };
        *slot = v;
    }

    let ll_path = dir.join(LOGLIK);
    let (header, rows) = read_rows(&ll_path)?;
    if header != ["iterate", "unit", "t", "value"] {
        return Err(bad(&ll_path, "unexpected header"));
    }
    for (k, r) in rows.iter().enumerate() {
        let line = k + 2;
        let it: usize = num(&ll_path, line, &r[0])?;
        let i: usize = num(&ll_path, line, &r[1])?;
        let t: usize = num(&ll_path, line, &r[2])?;
        let v: f64 = num(&ll_path, line, &r[3])?;
        if i == 0 || i > m || t == 0 || t > n_times {
            return Err(bad(&ll_path, format!("line {line}: unit or time out of range")));
        }
        let d = index_of
            .get(&it)
            .map(|&k| &mut draws[k])
            .ok_or_else(|| bad(&ll_path, format!("line {line}: unknown iterate {it}")))?;
        d.loglik[(i - 1) * n_times + (t - 1)] = v;
    }
    if draws.iter().any(|d| d.loglik.iter().any(|v| v.is_nan())) {
        return Err(bad(&ll_path, "missing pointwise log-likelihood entries"));
    }

    let out = ChainOutput {
        m,
        n_times,
        config: meta.config.clone(),
        seed: meta.seed,
        draws,
        acceptance: meta.acceptance,
    };
    Ok((meta, out))
}
