//! Fit criteria and posterior summaries of saved chains.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::ChainOutput;
use crate::partition::{adjusted_rand_index, Partition};
use crate::stats::{equal_tailed_interval, log_sum_exp, mean, sample_variance, CompensatedSum};

fn check_matrix(loglik: &[Vec<f64>], min_draws: usize) -> Result<usize> {
    if loglik.len() < min_draws {
        return Err(Error::invalid(format!(
            "need at least {min_draws} draws, got {}",
            loglik.len()
        )));
    }
    let n = loglik[0].len();
    if loglik.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("ragged log-likelihood matrix"));
    }
    Ok(n)
}

fn column(loglik: &[Vec<f64>], i: usize) -> Vec<f64> {
    loglik.iter().map(|row| row[i]).collect()
}

/// Log pointwise predictive density, `Σᵢ log mean_s exp(ℓₛᵢ)`.
pub fn lppd(loglik: &[Vec<f64>]) -> Result<f64> {
    let n = check_matrix(loglik, 1)?;
    let ln_s = (loglik.len() as f64).ln();
    Ok((0..n)
        .map(|i| log_sum_exp(&column(loglik, i)) - ln_s)
        .collect::<CompensatedSum>()
        .value())
}

/// WAIC on the deviance scale, `−2(lppd − p_WAIC)`; `loglik` is draws × data.
pub fn waic(loglik: &[Vec<f64>]) -> Result<f64> {
    let n = check_matrix(loglik, 2)?;
    let p: CompensatedSum = (0..n).map(|i| sample_variance(&column(loglik, i))).collect();
    Ok(-2.0 * (lppd(loglik)? - p.value()))
}

/// Log pseudo marginal likelihood, `Σᵢ log CPOᵢ` with harmonic-mean CPO.
pub fn lpml(loglik: &[Vec<f64>]) -> Result<f64> {
    let n = check_matrix(loglik, 1)?;
    let ln_s = (loglik.len() as f64).ln();
    let mut total = CompensatedSum::default();
    for i in 0..n {
        let neg: Vec<f64> = loglik.iter().map(|row| -row[i]).collect();
        let log_cpo = -(log_sum_exp(&neg) - ln_s);
        if !log_cpo.is_finite() {
            return Err(Error::invalid(format!("infinite CPO for datum {}", i + 1)));
        }
        total.add(log_cpo);
    }
    Ok(total.value())
}

/// Posterior co-clustering probabilities, row-major `m × m`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoclusterMatrix {
    m: usize,
    p: Vec<f64>,
}

impl CoclusterMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.m + j]
    }

    pub fn m(&self) -> usize {
        self.m
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.m..(i + 1) * self.m]
    }
}

pub fn coclustering_matrix(draws: &[Partition]) -> Result<CoclusterMatrix> {
    let first = draws.first().ok_or_else(|| Error::invalid("no partition draws"))?;
    let m = first.n_units();
    if draws.iter().any(|d| d.n_units() != m) {
        return Err(Error::invalid("partition draws differ in size"));
    }
    let mut counts = vec![0u32; m * m];
    for d in draws {
        let l = d.labels();
        for i in 0..m {
            for j in i..m {
                if l[i] == l[j] {
                    counts[i * m + j] += 1;
                }
            }
        }
    }
    let s = draws.len() as f64;
    let mut p = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = f64::from(counts[i * m + j]) / s;
            p[i * m + j] = v;
            p[j * m + i] = v;
        }
    }
    Ok(CoclusterMatrix { m, p })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionLoss {
    Binder,
    /// Jensen lower bound of the expected variation of information.
    ViLb,
}

/// `Σ_{i<j} |1(cᵢ = cⱼ) − Pᵢⱼ|`.
pub fn binder_loss(p: &Partition, cc: &CoclusterMatrix) -> f64 {
    let l = p.labels();
    let m = l.len();
    let mut total = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let same = if l[i] == l[j] { 1.0 } else { 0.0 };
            total += (same - cc.get(i, j)).abs();
        }
    }
    total
}

/// `(1/m) Σₙ [log₂ |Ĉₙ| + log₂ Σₘ Pₙₘ − 2 log₂ Σ_{m ∈ Ĉₙ} Pₙₘ]`.
pub fn vi_lb_loss(p: &Partition, cc: &CoclusterMatrix) -> f64 {
    let l = p.labels();
    let m = l.len();
    let sizes = p.cluster_sizes();
    let mut total = 0.0;
    for n in 0..m {
        let row = cc.row(n);
        let all: f64 = row.iter().sum();
        let within: f64 = (0..m).filter(|&k| l[k] == l[n]).map(|k| row[k]).sum();
        total += (sizes[l[n]] as f64).log2() + all.log2() - 2.0 * within.log2();
    }
    total / m as f64
}

fn loss_of(p: &Partition, cc: &CoclusterMatrix, loss: PartitionLoss) -> f64 {
    match loss {
        PartitionLoss::Binder => binder_loss(p, cc),
        PartitionLoss::ViLb => vi_lb_loss(p, cc),
    }
}

/// Sampled partition minimizing the expected loss (earliest draw on ties).
pub fn point_estimate_partition(draws: &[Partition], loss: PartitionLoss) -> Result<Partition> {
    let cc = coclustering_matrix(draws)?;
    let mut seen: HashMap<&Partition, ()> = HashMap::new();
    let mut best: Option<(f64, &Partition)> = None;
    for d in draws {
        if seen.insert(d, ()).is_some() {
            continue;
        }
        let v = loss_of(d, &cc, loss);
        if best.is_none_or(|(b, _)| v < b) {
            best = Some((v, d));
        }
    }
    Ok(best.expect("at least one draw").1.clone())
}

/// Draws-based estimate followed by one greedy pass that moves each unit to
/// the cluster (or a new one) that lowers the loss most.
pub fn point_estimate_refined(draws: &[Partition], loss: PartitionLoss) -> Result<Partition> {
    let cc = coclustering_matrix(draws)?;
    let mut best = point_estimate_partition(draws, loss)?;
    let mut best_loss = loss_of(&best, &cc, loss);
    let m = best.n_units();
    for i in 0..m {
        let k = best.n_clusters();
        let mut labels = best.labels().to_vec();
        let mut improved: Option<(f64, Vec<usize>)> = None;
        for h in 0..=k {
            if h == best.labels()[i] {
                continue;
            }
            labels[i] = h;
            let cand = Partition::canonicalize(&labels)?;
            let v = loss_of(&cand, &cc, loss);
            if v < best_loss - 1e-12 && improved.as_ref().is_none_or(|(b, _)| v < *b) {
                improved = Some((v, labels.clone()));
            }
        }
        if let Some((v, l)) = improved {
            best = Partition::canonicalize(&l)?;
            best_loss = v;
        }
    }
    Ok(best)
}

/// Mean and equal-tailed 95% interval of one parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub name: String,
    pub index: Vec<usize>,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn of(name: &str, index: Vec<usize>, values: &[f64]) -> Self {
        let (lower, upper) = equal_tailed_interval(values, 0.95);
        Interval {
            name: name.to_string(),
            index,
            mean: mean(values),
            lower,
            upper,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub loss: PartitionLoss,
    /// Point estimate per time point.
    pub estimates: Vec<Partition>,
    /// `lagged_ari[s][t] = ARI(ρ̂ₛ, ρ̂ₜ)`.
    pub lagged_ari: Vec<Vec<f64>>,
    pub waic: f64,
    pub lpml: f64,
    pub intervals: Vec<Interval>,
    /// Intervals for `μᵢₜ`, index `[i, t]` (1-based).
    pub mu_intervals: Vec<Interval>,
}

impl EstimateReport {
    /// Mean ARI between estimates `lag` steps apart.
    pub fn mean_lagged_ari(&self, lag: usize) -> Option<f64> {
        let t = self.estimates.len();
        if lag == 0 || lag >= t {
            return None;
        }
        Some((0..t - lag).map(|s| self.lagged_ari[s][s + lag]).sum::<f64>() / (t - lag) as f64)
    }
}

pub fn estimate_report(
    chain: &ChainOutput,
    loss: PartitionLoss,
    refine: bool,
) -> Result<EstimateReport> {
    if chain.draws.is_empty() {
        return Err(Error::invalid("chain has no saved draws"));
    }
    let estimates: Vec<Partition> = (0..chain.n_times)
        .into_par_iter()
        .map(|t| {
            let draws = chain.partitions_at(t);
            if refine {
                point_estimate_refined(&draws, loss)
            } else {
                point_estimate_partition(&draws, loss)
            }
        })
        .collect::<Result<_>>()?;
    let n_times = chain.n_times;
    let mut lagged_ari = vec![vec![1.0; n_times]; n_times];
    for s in 0..n_times {
        for t in s + 1..n_times {
            let a = adjusted_rand_index(&estimates[s], &estimates[t])?;
            lagged_ari[s][t] = a;
            lagged_ari[t][s] = a;
        }
    }
    let ll = chain.loglik_matrix();
    let (waic, lpml) = if ll.len() >= 2 {
        (waic(&ll)?, lpml(&ll)?)
    } else {
        (f64::NAN, lpml(&ll)?)
    };
    let intervals = chain
        .series()
        .iter()
        .map(|s| Interval::of(s.name, vec![s.index], &s.values))
        .collect();
    let mut mu_intervals = Vec::with_capacity(chain.m * n_times);
    for i in 0..chain.m {
        for t in 0..n_times {
            mu_intervals.push(Interval::of("mu", vec![i + 1, t + 1], &chain.mu_draws(i, t)));
        }
    }
    Ok(EstimateReport {
        loss,
        estimates,
        lagged_ari,
        waic,
        lpml,
        intervals,
        mu_intervals,
    })
}
