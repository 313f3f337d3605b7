//! Forward simulation of the hierarchical model: parameters from their priors,
//! partitions from the temporal partition prior, then responses.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::eppf::EppfSpec;
use crate::error::Result;
use crate::prior::{sample_joint_prior_with, TrpmParams};

use super::config::ModelConfig;
use super::data::Dataset;
use super::sampler::uniform_open;
use super::state::{xi_to_eta, McmcState, TimeSlice};

fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + sd * z
}

fn laplace<R: Rng + ?Sized>(rng: &mut R, loc: f64, scale: f64) -> f64 {
    let u = uniform_open(rng, -0.5, 0.5);
    loc - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Draw a complete state from the prior of the configured model.
pub fn sample_prior_state<R: Rng + ?Sized>(
    config: &ModelConfig,
    m: usize,
    n_times: usize,
    eppf: &EppfSpec,
    rng: &mut R,
) -> Result<McmcState> {
    let p = &config.prior;
    let f = &config.fixed;
    let tg = &config.toggles;
    let alpha: Vec<f64> = (0..n_times)
        .map(|t| {
            if t == 0 {
                0.0
            } else if let Some(a) = f.alpha {
                a
            } else if tg.partition_dependence {
                Beta::new(p.a_alpha, p.b_alpha)
                    .expect("positive shapes")
                    .sample(rng)
            } else {
                0.0
            }
        })
        .collect();
    let params = TrpmParams::new(m, n_times, alpha.clone(), eppf.clone())?;
    let draw = sample_joint_prior_with(&params, rng);

    let phi0 = f.phi0.unwrap_or_else(|| normal(rng, 0.0, p.s2.sqrt()));
    let phi1 = match f.phi1 {
        Some(v) => v,
        None if tg.atom_ar => uniform_open(rng, -1.0, 1.0),
        None => 0.0,
    };
    let lambda = f.lambda.unwrap_or_else(|| uniform_open(rng, 0.0, p.a_lambda));
    let tau = f.tau.unwrap_or_else(|| uniform_open(rng, 0.0, p.a_tau));
    let theta: Vec<f64> = match &f.theta {
        Some(th) => th.clone(),
        None => {
            let mut th = Vec::with_capacity(n_times);
            th.push(normal(rng, phi0, lambda));
            let sd = lambda * (1.0 - phi1 * phi1).sqrt();
            for t in 1..n_times {
                let prev = th[t - 1];
                th.push(normal(rng, phi0 + phi1 * prev, sd));
            }
            th
        }
    };
    let eta: Vec<f64> = match &f.eta {
        Some(e) => e.clone(),
        None if tg.likelihood_ar => (0..m)
            .map(|_| xi_to_eta(laplace(rng, p.laplace_a, p.laplace_b)))
            .collect(),
        None => vec![0.0; m],
    };
    let slices = (0..n_times)
        .map(|t| {
            let part = &draw.partitions[t];
            let k = part.n_clusters();
            let mu = (0..k).map(|_| normal(rng, theta[t], tau)).collect();
            let sigma = (0..k).map(|_| uniform_open(rng, 0.0, p.a_sigma)).collect();
            TimeSlice {
                labels: part.labels().to_vec(),
                mu,
                sigma,
                gamma: draw.gammas[t].as_slice().to_vec(),
                theta: theta[t],
                alpha: alpha[t],
            }
        })
        .collect();
    Ok(McmcState {
        slices,
        tau,
        phi0,
        phi1,
        lambda,
        eta,
    })
}

/// Responses given a state: `Y_i1 ~ N(μ, σ²)`, then
/// `Y_it ~ N(μ + η Y_i,t-1, σ²(1 − η²))`.
pub fn sample_responses<R: Rng + ?Sized>(state: &McmcState, rng: &mut R) -> Vec<Vec<f64>> {
    let (m, n_times) = (state.m(), state.n_times());
    let mut rows = vec![Vec::with_capacity(n_times); m];
    for t in 0..n_times {
        for (i, row) in rows.iter_mut().enumerate() {
            let mu = state.mu_of(i, t);
            let sd = state.sigma_of(i, t);
            let y = if t == 0 {
                normal(rng, mu, sd)
            } else {
                let eta = state.eta[i];
                normal(rng, mu + eta * row[t - 1], sd * (1.0 - eta * eta).sqrt())
            };
            row.push(y);
        }
    }
    rows
}

/// A synthetic dataset drawn from the full model, with its generating state.
pub fn simulate_dataset<R: Rng + ?Sized>(
    config: &ModelConfig,
    m: usize,
    n_times: usize,
    eppf: &EppfSpec,
    rng: &mut R,
) -> Result<(Dataset, McmcState)> {
    let state = sample_prior_state(config, m, n_times, eppf, rng)?;
    let data = Dataset::new(sample_responses(&state, rng))?;
    Ok((data, state))
}
