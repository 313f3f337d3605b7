use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;

use super::config::ModelConfig;
use super::data::Dataset;
use super::sampler::{Acceptance, Sampler};

/// One saved iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    /// 1-based sweep number.
    pub iteration: usize,
    /// Canonical partition per time point.
    pub partitions: Vec<Partition>,
    pub gammas: Vec<Vec<bool>>,
    pub alpha: Vec<f64>,
    pub theta: Vec<f64>,
    pub tau: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub lambda: f64,
    pub eta: Vec<f64>,
    /// `μᵢₜ`, row-major `m × T`.
    pub mu: Vec<f64>,
    /// `σᵢₜ`, row-major `m × T`.
    pub sigma: Vec<f64>,
    /// Pointwise log-likelihood, row-major `m × T`.
    pub loglik: Vec<f64>,
}

/// Saved draws of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub m: usize,
    pub n_times: usize,
    pub config: ModelConfig,
    pub seed: u64,
    pub draws: Vec<Draw>,
    pub acceptance: Acceptance,
}

impl Draw {
    fn capture(sampler: &Sampler, iteration: usize) -> Self {
        let st = sampler.state();
        let (m, n_times) = (st.m(), st.n_times());
        let mut mu = Vec::with_capacity(m * n_times);
        let mut sigma = Vec::with_capacity(m * n_times);
        let mut loglik = Vec::with_capacity(m * n_times);
        for i in 0..m {
            for t in 0..n_times {
                mu.push(st.mu_of(i, t));
                sigma.push(st.sigma_of(i, t));
                loglik.push(sampler.pointwise_loglik(i, t));
            }
        }
        Draw {
            iteration,
            partitions: st.slices.iter().map(|s| s.partition()).collect(),
            gammas: st.slices.iter().map(|s| s.gamma.clone()).collect(),
            alpha: st.slices.iter().map(|s| s.alpha).collect(),
            theta: st.slices.iter().map(|s| s.theta).collect(),
            tau: st.tau,
            phi0: st.phi0,
            phi1: st.phi1,
            lambda: st.lambda,
            eta: st.eta.clone(),
            mu,
            sigma,
            loglik,
        }
    }
}

/// A named scalar series: `index` is 1-based (time or unit), 1 for globals.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: &'static str,
    pub index: usize,
    pub values: Vec<f64>,
}

impl ChainOutput {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }

    /// Partition draws at time `t` (0-based).
    pub fn partitions_at(&self, t: usize) -> Vec<Partition> {
        self.draws.iter().map(|d| d.partitions[t].clone()).collect()
    }

    /// `S × (m·T)` pointwise log-likelihood matrix.
    pub fn loglik_matrix(&self) -> Vec<Vec<f64>> {
        self.draws.iter().map(|d| d.loglik.clone()).collect()
    }

    /// Draws of `μᵢₜ`.
    pub fn mu_draws(&self, i: usize, t: usize) -> Vec<f64> {
        let k = i * self.n_times + t;
        self.draws.iter().map(|d| d.mu[k]).collect()
    }

    /// Every scalar parameter series, in a fixed order. `α` is reported for
    /// time points 2..T only.
    pub fn series(&self) -> Vec<Series> {
        let col = |f: &dyn Fn(&Draw) -> f64| self.draws.iter().map(f).collect::<Vec<f64>>();
        let mut out = Vec::new();
        for t in 1..self.n_times {
            out.push(Series {
                name: "alpha",
                index: t + 1,
                values: col(&|d| d.alpha[t]),
            });
        }
        for t in 0..self.n_times {
            out.push(Series {
                name: "theta",
                index: t + 1,
                values: col(&|d| d.theta[t]),
            });
        }
        out.push(Series {
            name: "tau",
            index: 1,
            values: col(&|d| d.tau),
        });
        out.push(Series {
            name: "phi0",
            index: 1,
            values: col(&|d| d.phi0),
        });
        out.push(Series {
            name: "phi1",
            index: 1,
            values: col(&|d| d.phi1),
        });
        out.push(Series {
            name: "lambda",
            index: 1,
            values: col(&|d| d.lambda),
        });
        for i in 0..self.m {
            out.push(Series {
                name: "eta",
                index: i + 1,
                values: col(&|d| d.eta[i]),
            });
        }
        out
    }
}

/// Run a chain and keep the post-burn-in, thinned draws.
pub fn run_chain(data: &Dataset, config: &ModelConfig) -> Result<ChainOutput> {
    run_chain_with(data, config, 0, |_| {})
}

/// As [`run_chain`], for chain number `chain` (independent stream) with a
/// callback after every sweep.
pub fn run_chain_with(
    data: &Dataset,
    config: &ModelConfig,
    chain: u64,
    mut progress: impl FnMut(usize),
) -> Result<ChainOutput> {
    let mut sampler = Sampler::with_chain(data.clone(), config.clone(), chain)?;
    let mc = &config.mcmc;
    let mut draws = Vec::with_capacity(mc.n_saved());
    let warmup = mc.warmup_sweeps();
    for iter in 1..=mc.iterations {
        if iter <= warmup {
            sampler.warmup_sweep()?;
        } else {
            sampler.sweep()?;
        }
        if mc.is_saved(iter) {
            let d = Draw::capture(&sampler, iter);
            if let Some(k) = d.loglik.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numerical {
                    sweep: iter,
                    message: format!(
                        "non-finite log-likelihood at unit {}, time {}",
                        k / data.n_times() + 1,
                        k % data.n_times() + 1
                    ),
                });
            }
            draws.push(d);
        }
        progress(iter);
    }
    Ok(ChainOutput {
        m: data.m(),
        n_times: data.n_times(),
        config: config.clone(),
        seed: mc.seed,
        draws,
        acceptance: *sampler.acceptance(),
    })
}
