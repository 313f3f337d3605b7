//! Synthetic data generators for the two simulation designs.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eppf::EppfSpec;
use crate::error::{Error, Result};
use crate::partition::{GammaVector, Partition};
use crate::prior::{sample_joint_prior_with, TrpmParams};
use crate::rng::stream;
use crate::stats::mean_and_se;

/// Responses together with the partitions and atoms that generated them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthData {
    /// `y[i][t]`.
    pub y: Vec<Vec<f64>>,
    pub partitions: Vec<Partition>,
    pub gammas: Vec<GammaVector>,
    /// Cluster means per time point, indexed by canonical label.
    pub atoms: Vec<Vec<f64>>,
    pub sigma: f64,
}

impl SynthData {
    /// True `μᵢₜ`.
    pub fn mu(&self, i: usize, t: usize) -> f64 {
        self.atoms[t][self.partitions[t].label(i)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sim1Params {
    pub m: usize,
    pub n_times: usize,
    pub alpha: f64,
    pub mass: f64,
    pub sigma: f64,
    pub tau: f64,
    pub theta: f64,
}

impl Default for Sim1Params {
    fn default() -> Self {
        Sim1Params {
            m: 50,
            n_times: 5,
            alpha: 0.5,
            mass: 1.0,
            sigma: 1.0,
            tau: 5.0,
            theta: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sim2Params {
    pub m: usize,
    pub n_times: usize,
    pub alpha: f64,
    pub phi1: f64,
    pub mass: f64,
    pub sigma: f64,
    pub tau: f64,
}

impl Default for Sim2Params {
    fn default() -> Self {
        Sim2Params {
            m: 25,
            n_times: 10,
            alpha: 0.5,
            phi1: 0.5,
            mass: 1.0,
            sigma: 1.0,
            tau: 10.0,
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + sd * z
}

fn check_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// Simulation 1: partitions from the temporal CRP prior, atoms
/// `μ*ⱼₜ ~ N(θ, τ²)` independently, `Yᵢₜ ~ N(μ*, σ²)`.
pub fn sim1<R: Rng + ?Sized>(p: &Sim1Params, rng: &mut R) -> Result<SynthData> {
    check_positive(&[("sigma", p.sigma), ("tau", p.tau)])?;
    let params = TrpmParams::constant(p.m, p.n_times, p.alpha, EppfSpec::crp(p.mass)?)?;
    let draw = sample_joint_prior_with(&params, rng);
    let atoms: Vec<Vec<f64>> = draw
        .partitions
        .iter()
        .map(|part| (0..part.n_clusters()).map(|_| normal(rng, p.theta, p.tau)).collect())
        .collect();
    Ok(finish(draw.partitions, draw.gammas, atoms, p.sigma, rng))
}

/// Simulation 2: as above but atoms evolve as AR(1) across the reallocation
/// bridge. A time-`t+1` cluster holding units that kept their allocation
/// continues the atom of the time-`t` cluster they came from,
/// `μ ~ N(φ₁ μ_prev, τ²(1 − φ₁²))`; clusters made only of reallocated units
/// draw a fresh `N(0, τ²)` atom.
pub fn sim2<R: Rng + ?Sized>(p: &Sim2Params, rng: &mut R) -> Result<SynthData> {
    check_positive(&[("sigma", p.sigma), ("tau", p.tau)])?;
    if !(-1.0..=1.0).contains(&p.phi1) {
        return Err(Error::invalid(format!("phi1 {} outside [-1, 1]", p.phi1)));
    }
    let params = TrpmParams::constant(p.m, p.n_times, p.alpha, EppfSpec::crp(p.mass)?)?;
    let draw = sample_joint_prior_with(&params, rng);
    let mut atoms: Vec<Vec<f64>> = Vec::with_capacity(p.n_times);
    let innov = p.tau * (1.0 - p.phi1 * p.phi1).sqrt();
    for (t, part) in draw.partitions.iter().enumerate() {
        let k = part.n_clusters();
        let mut parent = vec![None; k];
        if t > 0 {
            let prev = &draw.partitions[t - 1];
            let g = &draw.gammas[t];
            for i in 0..p.m {
                if g.get(i) {
                    parent[part.label(i)] = Some(prev.label(i));
                }
            }
        }
        let row = parent
            .iter()
            .map(|par| match par {
                Some(j) => normal(rng, p.phi1 * atoms[t - 1][*j], innov),
                None => normal(rng, 0.0, p.tau),
            })
            .collect();
        atoms.push(row);
    }
    Ok(finish(draw.partitions, draw.gammas, atoms, p.sigma, rng))
}

fn finish<R: Rng + ?Sized>(
    partitions: Vec<Partition>,
    gammas: Vec<GammaVector>,
    atoms: Vec<Vec<f64>>,
    sigma: f64,
    rng: &mut R,
) -> SynthData {
    let m = partitions[0].n_units();
    let y = (0..m)
        .map(|i| {
            partitions
                .iter()
                .zip(&atoms)
                .map(|(part, a)| normal(rng, a[part.label(i)], sigma))
                .collect()
        })
        .collect();
    SynthData {
        y,
        partitions,
        gammas,
        atoms,
        sigma,
    }
}

/// Lag-`lag` autocorrelation of a series about a known mean of zero,
/// `Σ yₜ yₜ₊ₗ / Σ yₜ²`.
pub fn autocorrelation_about_zero(y: &[f64], lag: usize) -> f64 {
    let den: f64 = y.iter().map(|v| v * v).sum();
    let num: f64 = y.iter().zip(&y[lag.min(y.len())..]).map(|(a, b)| a * b).sum();
    num / den
}

/// Unit-averaged lag-1 autocorrelation per replicate, then its mean and
/// standard error across replicates (replicate `r` uses stream `(seed, r)`).
pub fn sim2_autocorrelation(p: &Sim2Params, n_rep: usize, seed: u64) -> Result<(f64, f64)> {
    if n_rep < 2 {
        return Err(Error::invalid("need at least two replicates"));
    }
    let per_rep: Vec<f64> = (0..n_rep as u64)
        .into_par_iter()
        .map(|r| {
            let data = sim2(p, &mut stream(seed, r))?;
            let acf: f64 = data
                .y
                .iter()
                .map(|row| autocorrelation_about_zero(row, 1))
                .sum::<f64>();
            Ok(acf / data.y.len() as f64)
        })
        .collect::<Result<_>>()?;
    let (mean, se) = mean_and_se(&per_rep);
    Ok((mean, se.expect("two or more replicates")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sim1_shapes_and_truth() {
        let p = Sim1Params {
            alpha: 0.9,
            ..Default::default()
        };
        let d = sim1(&p, &mut stream(1, 0)).unwrap();
        assert_eq!(d.y.len(), 50);
        assert!(d.y.iter().all(|r| r.len() == 5));
        assert_eq!(d.partitions.len(), 5);
        for t in 0..5 {
            assert_eq!(d.atoms[t].len(), d.partitions[t].n_clusters());
        }
        let resid: Vec<f64> = (0..50).map(|i| d.y[i][0] - d.mu(i, 0)).collect();
        assert!(crate::stats::mean(&resid).abs() < 0.6);
    }

    #[test]
    fn sim2_rejects_bad_phi() {
        let p = Sim2Params {
            phi1: 1.5,
            ..Default::default()
        };
        assert!(sim2(&p, &mut stream(1, 0)).is_err());
    }

    #[test]
    fn autocorrelation_examples() {
        assert!((autocorrelation_about_zero(&[1.0, 1.0, 1.0, 1.0], 1) - 0.75).abs() < 1e-12);
        assert!((autocorrelation_about_zero(&[1.0, -1.0, 1.0, -1.0], 1) + 0.75).abs() < 1e-12);
    }

    #[test]
    fn full_persistence_copies_atoms() {
        let p = Sim2Params {
            alpha: 1.0,
            phi1: 1.0,
            ..Default::default()
        };
        let d = sim2(&p, &mut stream(4, 0)).unwrap();
        for t in 1..p.n_times {
            assert_eq!(d.atoms[t], d.atoms[0]);
        }
    }
}
