use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{compatible_on, Partition};

use super::config::ETA_BOUND;

/// Parameters attached to one time point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSlice {
    /// Dense 0-based cluster labels (not necessarily first-appearance order).
    pub labels: Vec<usize>,
    /// `μ*ⱼₜ`, indexed by label.
    pub mu: Vec<f64>,
    /// `σ*ⱼₜ`, indexed by label.
    pub sigma: Vec<f64>,
    /// `γᵢₜ`; all false at the first time point.
    pub gamma: Vec<bool>,
    pub theta: f64,
    /// Unused at the first time point.
    pub alpha: f64,
}

impl TimeSlice {
    pub fn n_clusters(&self) -> usize {
        self.mu.len()
    }

    pub fn partition(&self) -> Partition {
        Partition::from_usize_labels(&self.labels)
    }

    /// Relabel clusters in first-appearance order, permuting the atoms along.
    pub fn canonicalize(&mut self) {
        let k = self.mu.len();
        let mut map = vec![usize::MAX; k];
        let mut next = 0;
        for l in &mut self.labels {
            if map[*l] == usize::MAX {
                map[*l] = next;
                next += 1;
            }
            *l = map[*l];
        }
        let mut mu = vec![0.0; k];
        let mut sigma = vec![0.0; k];
        for (old, &new) in map.iter().enumerate() {
            mu[new] = self.mu[old];
            sigma[new] = self.sigma[old];
        }
        self.mu = mu;
        self.sigma = sigma;
    }
}

/// Full state of the hierarchical model at one sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McmcState {
    pub slices: Vec<TimeSlice>,
    pub tau: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub lambda: f64,
    /// `η₁ᵢ` per unit.
    pub eta: Vec<f64>,
}

impl McmcState {
    pub fn n_times(&self) -> usize {
        self.slices.len()
    }

    pub fn m(&self) -> usize {
        self.eta.len()
    }

    /// `ξᵢ = logit((η₁ᵢ + 1) / 2)`.
    pub fn xi(&self, i: usize) -> f64 {
        eta_to_xi(self.eta[i])
    }

    /// `μᵢₜ`, the mean atom of unit `i` at time `t`.
    pub fn mu_of(&self, i: usize, t: usize) -> f64 {
        let s = &self.slices[t];
        s.mu[s.labels[i]]
    }

    pub fn sigma_of(&self, i: usize, t: usize) -> f64 {
        let s = &self.slices[t];
        s.sigma[s.labels[i]]
    }

    /// Structural check: dense labels, aligned atoms, parameters inside their
    /// supports and compatibility between consecutive partitions.
    pub fn check(&self, a_sigma: f64, a_tau: f64, a_lambda: f64) -> Result<()> {
        let m = self.m();
        let bad = |msg: String| Err(Error::invalid(msg));
        if self.slices.is_empty() {
            return bad("state has no time points".into());
        }
        for (t, s) in self.slices.iter().enumerate() {
            if s.labels.len() != m || s.gamma.len() != m {
                return bad(format!("time {}: expected {m} units", t + 1));
            }
            let k = s.mu.len();
            if s.sigma.len() != k {
                return bad(format!("time {}: {} means but {} scales", t + 1, k, s.sigma.len()));
            }
            let mut used = vec![false; k];
            for &l in &s.labels {
                if l >= k {
                    return bad(format!("time {}: label {l} without an atom", t + 1));
                }
                used[l] = true;
            }
            if let Some(j) = used.iter().position(|u| !u) {
                return bad(format!("time {}: orphan atom {j}", t + 1));
            }
            if s.mu.iter().any(|x| !x.is_finite()) || !s.theta.is_finite() {
                return bad(format!("time {}: non-finite mean parameter", t + 1));
            }
            if s.sigma.iter().any(|&x| !(x > 0.0 && x < a_sigma)) {
                return bad(format!("time {}: cluster scale outside (0, A_sigma)", t + 1));
            }
            if !(0.0..=1.0).contains(&s.alpha) {
                return bad(format!("time {}: alpha outside [0, 1]", t + 1));
            }
            if t == 0 {
                if s.gamma.iter().any(|&g| g) {
                    return bad("gamma must vanish at the first time point".into());
                }
            } else if !compatible_on(&s.labels, &self.slices[t - 1].labels, &s.gamma) {
                return bad(format!("time {} is not compatible with time {t}", t + 1));
            }
        }
        if !(self.tau > 0.0 && self.tau < a_tau) {
            return bad(format!("tau {} outside (0, A_tau)", self.tau));
        }
        if !(self.lambda > 0.0 && self.lambda < a_lambda) {
            return bad(format!("lambda {} outside (0, A_lambda)", self.lambda));
        }
        if !(self.phi1 > -1.0 && self.phi1 < 1.0) || !self.phi0.is_finite() {
            return bad("phi0 must be finite and phi1 inside (-1, 1)".into());
        }
        if self.eta.iter().any(|e| !(e.abs() <= ETA_BOUND)) {
            return bad("eta outside (-1, 1)".into());
        }
        Ok(())
    }
}

pub(crate) fn eta_to_xi(eta: f64) -> f64 {
    let p = 0.5 * (eta + 1.0);
    (p / (1.0 - p)).ln()
}

pub(crate) fn xi_to_eta(xi: f64) -> f64 {
    // 2 * sigmoid(xi) - 1 == tanh(xi / 2)
    (0.5 * xi).tanh().clamp(-ETA_BOUND, ETA_BOUND)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slice(labels: Vec<usize>, k: usize) -> TimeSlice {
        let m = labels.len();
        TimeSlice {
            labels,
            mu: (0..k).map(|j| j as f64).collect(),
            sigma: vec![1.0; k],
            gamma: vec![false; m],
            theta: 0.0,
            alpha: 0.0,
        }
    }

    #[test]
    fn canonicalize_moves_atoms() {
        let mut s = slice(vec![2, 0, 2, 1], 3);
        s.canonicalize();
        assert_eq!(s.labels, vec![0, 1, 0, 2]);
        assert_eq!(s.mu, vec![2.0, 0.0, 1.0]);
    }

    #[test]
    fn xi_eta_roundtrip() {
        for eta in [-0.9, -0.1, 0.0, 0.5, 0.99] {
            assert!((xi_to_eta(eta_to_xi(eta)) - eta).abs() < 1e-12);
        }
        assert!(xi_to_eta(100.0) < 1.0);
    }

    #[test]
    fn check_catches_structural_errors() {
        let mut st = McmcState {
            slices: vec![slice(vec![0, 0, 1], 2), slice(vec![0, 1, 1], 2)],
            tau: 1.0,
            phi0: 0.0,
            phi1: 0.0,
            lambda: 1.0,
            eta: vec![0.0; 3],
        };
        assert!(st.check(5.0, 5.0, 5.0).is_ok());
        st.slices[1].gamma = vec![true, true, false];
        assert!(st.check(5.0, 5.0, 5.0).is_err());
        st.slices[1].gamma = vec![false; 3];
        st.slices[1].mu.push(3.0);
        st.slices[1].sigma.push(1.0);
        assert!(st.check(5.0, 5.0, 5.0).unwrap_err().to_string().contains("orphan"));
        st.slices[1].mu.pop();
        st.slices[1].sigma.pop();
        st.tau = 6.0;
        assert!(st.check(5.0, 5.0, 5.0).is_err());
    }
}
