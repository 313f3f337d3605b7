use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which temporal links of the hierarchical model are active.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Toggles {
    /// Reallocation indicators with free `α_t`; off fixes `α_t = 0`.
    pub partition_dependence: bool,
    /// Unit-level AR(1) in the likelihood; off fixes `η₁ᵢ = 0`.
    pub likelihood_ar: bool,
    /// AR(1) on the time-level means; off fixes `φ₁ = 0`.
    pub atom_ar: bool,
    /// Spatial product partition law instead of the CRP.
    pub spatial: bool,
}

impl Toggles {
    /// The eight temporal variants (spatial flag copied from `self`).
    pub fn all_variants(spatial: bool) -> Vec<Toggles> {
        let mut out = Vec::with_capacity(8);
        for partition_dependence in [false, true] {
            for likelihood_ar in [false, true] {
                for atom_ar in [false, true] {
                    out.push(Toggles {
                        partition_dependence,
                        likelihood_ar,
                        atom_ar,
                        spatial,
                    });
                }
            }
        }
        out
    }

    /// Short identifier such as `p1-l0-a1` (plus `-s` when spatial).
    pub fn name(&self) -> String {
        let b = |x: bool| u8::from(x);
        let mut s = format!(
            "p{}-l{}-a{}",
            b(self.partition_dependence),
            b(self.likelihood_ar),
            b(self.atom_ar)
        );
        if self.spatial {
            s.push_str("-s");
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorHyper {
    /// CRP / cohesion concentration `M`.
    pub mass: f64,
    /// Similarity degrees of freedom `ν₀`.
    pub nu0: f64,
    /// Upper bound of the uniform prior on cluster standard deviations.
    pub a_sigma: f64,
    pub a_tau: f64,
    pub a_lambda: f64,
    /// Prior variance of `φ₀`.
    pub s2: f64,
    /// Laplace location and scale for `ξᵢ`.
    pub laplace_a: f64,
    pub laplace_b: f64,
    pub a_alpha: f64,
    pub b_alpha: f64,
}

impl Default for PriorHyper {
    fn default() -> Self {
        PriorHyper {
            mass: 1.0,
            nu0: 5.0,
            a_sigma: 5.0,
            a_tau: 5.0,
            a_lambda: 10.0,
            s2: 100.0,
            laplace_a: 0.0,
            laplace_b: 1.0,
            a_alpha: 1.0,
            b_alpha: 1.0,
        }
    }
}

/// Random-walk proposal standard deviations. Scales left unset default to a
/// tenth of the parameter's support width.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProposalScales {
    pub sigma: Option<f64>,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub phi1: Option<f64>,
    pub xi: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Leading burn-in sweeps run with the indicators held at zero
    /// (default: half of the burn-in).
    pub warmup: Option<usize>,
    pub seed: u64,
    pub proposals: ProposalScales,
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings {
            iterations: 10_000,
            burn_in: 5_000,
            thin: 5,
            warmup: None,
            seed: 1,
            proposals: ProposalScales::default(),
        }
    }
}

impl McmcSettings {
    pub fn n_saved(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in) / self.thin.max(1)
    }

    pub fn warmup_sweeps(&self) -> usize {
        self.warmup.unwrap_or(self.burn_in / 2)
    }

    /// Whether 1-based iteration `iter` is stored.
    pub fn is_saved(&self, iter: usize) -> bool {
        iter > self.burn_in && (iter - self.burn_in) % self.thin == 0
    }
}

/// Parameters held at a given value instead of being sampled.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedParams {
    pub alpha: Option<f64>,
    pub theta: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub phi0: Option<f64>,
    pub phi1: Option<f64>,
    pub lambda: Option<f64>,
    pub eta: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub toggles: Toggles,
    pub prior: PriorHyper,
    pub mcmc: McmcSettings,
    pub fixed: FixedParams,
}

pub(crate) const ETA_BOUND: f64 = 1.0 - 1e-6;

impl ModelConfig {
    pub fn validate(&self, m: usize, n_times: usize) -> Result<()> {
        let p = &self.prior;
        let positive = [
            ("mass", p.mass),
            ("a_sigma", p.a_sigma),
            ("a_tau", p.a_tau),
            ("a_lambda", p.a_lambda),
            ("s2", p.s2),
            ("laplace_b", p.laplace_b),
            ("a_alpha", p.a_alpha),
            ("b_alpha", p.b_alpha),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !p.laplace_a.is_finite() {
            return Err(Error::Config("laplace_a must be finite".into()));
        }
        if self.toggles.spatial && !(p.nu0 > 1.0 && p.nu0.is_finite()) {
            return Err(Error::Config(format!("nu0 must exceed 1, got {}", p.nu0)));
        }
        let mc = &self.mcmc;
        if mc.iterations == 0 || mc.thin == 0 {
            return Err(Error::Config("iterations and thin must be positive".into()));
        }
        if mc.burn_in >= mc.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                mc.burn_in, mc.iterations
            )));
        }
        if mc.warmup_sweeps() > mc.burn_in {
            return Err(Error::Config(format!(
                "warmup ({}) must not exceed burn_in ({})",
                mc.warmup_sweeps(),
                mc.burn_in
            )));
        }
        let scales = [
            mc.proposals.sigma,
            mc.proposals.tau,
            mc.proposals.lambda,
            mc.proposals.phi1,
            mc.proposals.xi,
        ];
        if scales.iter().flatten().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::Config("proposal scales must be positive".into()));
        }
        let f = &self.fixed;
        if let Some(a) = f.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::Config(format!("fixed alpha {a} outside [0, 1]")));
            }
            if a > 0.0 && !self.toggles.partition_dependence {
                return Err(Error::Config(
                    "a positive fixed alpha requires partition_dependence".into(),
                ));
            }
        }
        if let Some(theta) = &f.theta {
            if theta.len() != n_times || theta.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!(
                    "fixed theta needs {n_times} finite values"
                )));
            }
        }
        if let Some(tau) = f.tau {
            if !(tau > 0.0 && tau < p.a_tau) {
                return Err(Error::Config(format!("fixed tau {tau} outside (0, a_tau)")));
            }
        }
        if let Some(l) = f.lambda {
            if !(l > 0.0 && l < p.a_lambda) {
                return Err(Error::Config(format!("fixed lambda {l} outside (0, a_lambda)")));
            }
        }
        if let Some(phi1) = f.phi1 {
            if !(phi1 > -1.0 && phi1 < 1.0) || (!self.toggles.atom_ar && phi1 != 0.0) {
                return Err(Error::Config(format!(
                    "fixed phi1 {phi1} must lie in (-1, 1) and be 0 without atom_ar"
                )));
            }
        }
        if let Some(phi0) = f.phi0 {
            if !phi0.is_finite() {
                return Err(Error::Config("fixed phi0 must be finite".into()));
            }
        }
        if let Some(eta) = &f.eta {
            let bad = eta.len() != m
                || eta.iter().any(|e| !(e.abs() <= ETA_BOUND))
                || (!self.toggles.likelihood_ar && eta.iter().any(|&e| e != 0.0));
            if bad {
                return Err(Error::Config(format!(
                    "fixed eta needs {m} values in (-1, 1), all zero without likelihood_ar"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn sigma_step(&self) -> f64 {
        self.mcmc.proposals.sigma.unwrap_or(0.1 * self.prior.a_sigma)
    }

    pub(crate) fn tau_step(&self) -> f64 {
        self.mcmc.proposals.tau.unwrap_or(0.1 * self.prior.a_tau)
    }

    pub(crate) fn lambda_step(&self) -> f64 {
        self.mcmc.proposals.lambda.unwrap_or(0.1 * self.prior.a_lambda)
    }

    pub(crate) fn phi1_step(&self) -> f64 {
        self.mcmc.proposals.phi1.unwrap_or(0.2)
    }

    pub(crate) fn xi_step(&self) -> f64 {
        self.mcmc.proposals.xi.unwrap_or(0.2)
    }
}
