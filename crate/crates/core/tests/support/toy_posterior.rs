//! Exact posterior over partition pairs `(ρ₁, ρ₂)` of a two-time-point
//! instance, by enumeration. Time-level means and `τ` are fixed, cluster
//! means `μ ~ N(θₜ, τ²)` are integrated in closed form and cluster standard
//! deviations `σ ~ U(0, A)` by Simpson's rule. `α ~ Beta(1, 1)` is
//! integrated out of the indicator law.

use std::collections::HashMap;

use statrs::function::gamma::ln_gamma;
use tempart_core::{crp_log_prob, enumerate_partitions, Partition};

pub struct ToyModel {
    pub theta: [f64; 2],
    pub tau: f64,
    pub a_sigma: f64,
    pub mass: f64,
}

pub fn compatible(now: &[usize], prev: &[usize], gamma: &[bool]) -> bool {
    let m = now.len();
    (0..m).all(|i| {
        (0..m).all(|j| !gamma[i] || !gamma[j] || (now[i] == now[j]) == (prev[i] == prev[j]))
    })
}

impl ToyModel {
    /// Marginal density of one cluster's responses.
    pub fn cluster_marginal(&self, y: &[f64], theta: f64) -> f64 {
        let n = y.len() as f64;
        let d: Vec<f64> = y.iter().map(|v| v - theta).collect();
        let s1: f64 = d.iter().sum();
        let s2: f64 = d.iter().map(|v| v * v).sum();
        let t2 = self.tau * self.tau;
        let density = |sigma: f64| -> f64 {
            if sigma <= 0.0 {
                return 0.0;
            }
            let s = sigma * sigma;
            let c = s + n * t2;
            let log_det = (n - 1.0) * s.ln() + c.ln();
            let quad = (s2 - t2 * s1 * s1 / c) / s;
            (-0.5 * (n * (2.0 * std::f64::consts::PI).ln() + log_det + quad)).exp()
        };
        let steps = 200_000;
        let h = self.a_sigma / steps as f64;
        let mut total = density(0.0) + density(self.a_sigma);
        for k in 1..steps {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            total += w * density(k as f64 * h);
        }
        total * h / 3.0 / self.a_sigma
    }

    fn partition_likelihood(&self, p: &Partition, y: &[f64], theta: f64) -> f64 {
        p.clusters()
            .iter()
            .map(|members| {
                let ys: Vec<f64> = members.iter().map(|&i| y[i]).collect();
                self.cluster_marginal(&ys, theta)
            })
            .product()
    }

    /// Normalized posterior probability of every partition pair.
    pub fn exact_posterior(&self, y: &[[f64; 2]]) -> HashMap<(Partition, Partition), f64> {
        let m = y.len();
        let parts = enumerate_partitions(m).unwrap();
        let crp: Vec<f64> = parts.iter().map(|p| crp_log_prob(p, self.mass).unwrap().exp()).collect();
        let y1: Vec<f64> = y.iter().map(|r| r[0]).collect();
        let y2: Vec<f64> = y.iter().map(|r| r[1]).collect();
        let lik1: Vec<f64> = parts.iter().map(|p| self.partition_likelihood(p, &y1, self.theta[0])).collect();
        let lik2: Vec<f64> = parts.iter().map(|p| self.partition_likelihood(p, &y2, self.theta[1])).collect();
        let mut out = HashMap::new();
        let mut total = 0.0;
        for (a, p1) in parts.iter().enumerate() {
            for (b, p2) in parts.iter().enumerate() {
                let mut prior = 0.0;
                for bits in 0..(1u32 << m) {
                    let gamma: Vec<bool> = (0..m).map(|i| bits >> i & 1 == 1).collect();
                    if !compatible(p2.labels(), p1.labels(), &gamma) {
                        continue;
                    }
                    let s = gamma.iter().filter(|&&g| g).count() as f64;
                    let log_beta =
                        ln_gamma(1.0 + s) + ln_gamma(1.0 + m as f64 - s) - ln_gamma(2.0 + m as f64);
                    let z: f64 = parts
                        .iter()
                        .zip(&crp)
                        .filter(|(q, _)| compatible(q.labels(), p1.labels(), &gamma))
                        .map(|(_, w)| w)
                        .sum();
                    prior += log_beta.exp() * crp[b] / z;
                }
                let w = crp[a] * prior * lik1[a] * lik2[b];
                total += w;
                out.insert((p1.clone(), p2.clone()), w);
            }
        }
        for v in out.values_mut() {
            *v /= total;
        }
        out
    }
}
