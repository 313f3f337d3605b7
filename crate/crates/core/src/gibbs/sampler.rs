use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::eppf::{ClusterSummary, EppfSpec};
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};
use crate::stats::{normal_log_density, sample_log_weights};

use super::config::ModelConfig;
use super::data::Dataset;
use super::state::{eta_to_xi, xi_to_eta, McmcState, TimeSlice};

const VAR_FLOOR: f64 = 1e-12;

/// Accepted / proposed counts of one random-walk block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveCount {
    pub accepted: u64,
    pub proposed: u64,
}

impl MoveCount {
    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub sigma: MoveCount,
    pub tau: MoveCount,
    pub phi1: MoveCount,
    pub lambda: MoveCount,
    pub xi: MoveCount,
}

/// Which blocks are sampled (the rest are held fixed).
#[derive(Clone, Copy, Debug)]
struct Active {
    gamma: bool,
    alpha: bool,
    theta: bool,
    tau: bool,
    phi0: bool,
    phi1: bool,
    lambda: bool,
    eta: bool,
}

impl Active {
    fn from_config(c: &ModelConfig) -> Self {
        let f = &c.fixed;
        let dep = c.toggles.partition_dependence;
        Active {
            gamma: dep,
            alpha: dep && f.alpha.is_none(),
            theta: f.theta.is_none(),
            tau: f.tau.is_none(),
            phi0: f.phi0.is_none(),
            phi1: c.toggles.atom_ar && f.phi1.is_none(),
            lambda: f.lambda.is_none(),
            eta: c.toggles.likelihood_ar && f.eta.is_none(),
        }
    }
}

/// Build the partition law selected by the configuration.
pub fn eppf_for(config: &ModelConfig, data: &Dataset) -> Result<EppfSpec> {
    if config.toggles.spatial {
        let coords = data
            .coords()
            .ok_or_else(|| Error::Config("the spatial model needs unit locations".into()))?;
        EppfSpec::sppm(config.prior.mass, config.prior.nu0, coords.to_vec())
    } else {
        EppfSpec::crp(config.prior.mass)
    }
}

/// Starting point: every unit in its own cluster with its atom at the
/// observed value, nothing fixed.
pub fn initial_state(data: &Dataset, config: &ModelConfig) -> McmcState {
    let (m, n_times) = (data.m(), data.n_times());
    let p = &config.prior;
    let f = &config.fixed;
    let theta: Vec<f64> = match &f.theta {
        Some(th) => th.clone(),
        None => (0..n_times).map(|t| data.time_mean(t)).collect(),
    };
    let alpha = f
        .alpha
        .unwrap_or(if config.toggles.partition_dependence { 0.5 } else { 0.0 });
    let slices = (0..n_times)
        .map(|t| TimeSlice {
            labels: (0..m).collect(),
            mu: (0..m).map(|i| data.y(i, t)).collect(),
            sigma: vec![0.5 * p.a_sigma; m],
            gamma: vec![false; m],
            theta: theta[t],
            alpha: if t == 0 { 0.0 } else { alpha },
        })
        .collect();
    McmcState {
        slices,
        tau: f.tau.unwrap_or(0.5 * p.a_tau),
        phi0: f
            .phi0
            .unwrap_or(theta.iter().sum::<f64>() / n_times as f64),
        phi1: f.phi1.unwrap_or(0.0),
        lambda: f.lambda.unwrap_or(0.5 * p.a_lambda),
        eta: f.eta.clone().unwrap_or_else(|| vec![0.0; m]),
    }
}

/// Draw from the open interval `(lo, hi)`.
pub(crate) fn uniform_open<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    loop {
        let x = lo + (hi - lo) * rng.random::<f64>();
        if x > lo && x < hi {
            return x;
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + sd * z
}

/// Gibbs / Metropolis sampler for the hierarchical model.
pub struct Sampler {
    data: Dataset,
    config: ModelConfig,
    eppf: EppfSpec,
    active: Active,
    state: McmcState,
    /// Per time point, partition-law summaries indexed by label.
    summaries: Vec<Vec<ClusterSummary>>,
    rng: StreamRng,
    sweep: usize,
    acceptance: Acceptance,
}

impl Sampler {
    /// Validates the configuration and starts chain 0 from [`initial_state`].
    pub fn new(data: Dataset, config: ModelConfig) -> Result<Self> {
        Self::with_chain(data, config, 0)
    }

    pub fn with_chain(data: Dataset, config: ModelConfig, chain: u64) -> Result<Self> {
        config.validate(data.m(), data.n_times())?;
        let eppf = eppf_for(&config, &data)?;
        let state = initial_state(&data, &config);
        let rng = stream(config.mcmc.seed, chain);
        let mut s = Sampler {
            data,
            active: Active::from_config(&config),
            config,
            eppf,
            state,
            summaries: Vec::new(),
            rng,
            sweep: 0,
            acceptance: Acceptance::default(),
        };
        s.rebuild_summaries();
        Ok(s)
    }

    pub fn state(&self) -> &McmcState {
        &self.state
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn eppf(&self) -> &EppfSpec {
        &self.eppf
    }

    pub fn acceptance(&self) -> &Acceptance {
        &self.acceptance
    }

    pub fn sweeps_done(&self) -> usize {
        self.sweep
    }

    pub fn rng_mut(&mut self) -> &mut StreamRng {
        &mut self.rng
    }

    /// Replace the state after checking it against the supports.
    pub fn set_state(&mut self, state: McmcState) -> Result<()> {
        if state.m() != self.data.m() || state.n_times() != self.data.n_times() {
            return Err(Error::invalid("state dimensions do not match the data"));
        }
        let p = &self.config.prior;
        state.check(p.a_sigma, p.a_tau, p.a_lambda)?;
        self.state = state;
        self.rebuild_summaries();
        Ok(())
    }

    /// Swap in new responses of the same shape (locations are kept).
    pub fn set_data(&mut self, data: Dataset) -> Result<()> {
        if data.m() != self.data.m() || data.n_times() != self.data.n_times() {
            return Err(Error::invalid("replacement data has a different shape"));
        }
        self.data = data;
        Ok(())
    }

    fn rebuild_summaries(&mut self) {
        self.summaries = self
            .state
            .slices
            .iter()
            .map(|s| {
                let mut c = vec![self.eppf.empty_cluster(); s.n_clusters()];
                for (i, &l) in s.labels.iter().enumerate() {
                    self.eppf.add_to(&mut c[l], i);
                }
                c
            })
            .collect();
    }

    /// One full sweep: per time point the indicators then the labels of free
    /// units, then atoms, then the remaining parameters, then `α`.
    pub fn sweep(&mut self) -> Result<()> {
        self.sweep_with(true)
    }

    /// A sweep with the indicators and `α` held where they are. Starting
    /// from all `γ = 0` this is the independent-partition kernel; used to
    /// move away from the initial state early in burn-in.
    pub fn warmup_sweep(&mut self) -> Result<()> {
        self.sweep_with(false)
    }

    fn sweep_with(&mut self, dependence: bool) -> Result<()> {
        let (m, n_times) = (self.data.m(), self.data.n_times());
        for t in 0..n_times {
            if t > 0 && dependence && self.active.gamma {
                for i in 0..m {
                    self.update_gamma(t, i);
                }
            }
            for i in 0..m {
                if !self.state.slices[t].gamma[i] {
                    self.update_label(t, i);
                }
            }
        }
        self.update_atoms()?;
        self.update_hyper()?;
        if dependence && self.active.alpha {
            for t in 1..n_times {
                self.update_alpha(t);
            }
        }
        self.sweep += 1;
        debug_assert!({
            let p = &self.config.prior;
            self.state.check(p.a_sigma, p.a_tau, p.a_lambda).is_ok()
        });
        Ok(())
    }

    /// Residual and variance factor of `Y_it` given unit `i`'s AR term.
    #[inline]
    fn residual(&self, i: usize, t: usize) -> (f64, f64) {
        let y = self.data.y(i, t);
        if t == 0 {
            (y, 1.0)
        } else {
            let eta = self.state.eta[i];
            (y - eta * self.data.y(i, t - 1), 1.0 - eta * eta)
        }
    }

    #[inline]
    fn obs_log_density(&self, i: usize, t: usize, mu: f64, sigma: f64) -> f64 {
        let (r, f) = self.residual(i, t);
        normal_log_density(r, mu, (sigma * sigma * f).max(VAR_FLOOR))
    }

    /// Pointwise log-likelihood of `Y_it` under the current state.
    pub fn pointwise_loglik(&self, i: usize, t: usize) -> f64 {
        self.obs_log_density(i, t, self.state.mu_of(i, t), self.state.sigma_of(i, t))
    }

    /// Full conditional draw of `γᵢₜ` (`t ≥ 1`, 0-based).
    pub fn update_gamma(&mut self, t: usize, i: usize) {
        assert!(t > 0, "no indicators at the first time point");
        let slice = &self.state.slices[t];
        let prev = &self.state.slices[t - 1].labels;
        let alpha = slice.alpha;
        let lt = &slice.labels;
        let mut co = self.eppf.empty_cluster();
        let mut n_other = 0usize;
        let mut compatible = true;
        for j in 0..lt.len() {
            if j == i || !slice.gamma[j] {
                continue;
            }
            n_other += 1;
            let same_now = lt[j] == lt[i];
            if same_now != (prev[j] == prev[i]) {
                compatible = false;
                break;
            }
            if same_now {
                self.eppf.add_to(&mut co, j);
            }
        }
        let value = if !compatible || alpha <= 0.0 {
            false
        } else if alpha >= 1.0 {
            true
        } else {
            // predictive probability of i's current placement given the
            // other fixed units: Pr(ρ restricted to F ∪ {i}) / Pr(ρ restricted to F)
            let w = if co.size > 0 {
                self.eppf.log_seat_existing(&co, i)
            } else {
                self.eppf.log_seat_new(i)
            };
            let pred = (w - (self.eppf.mass() + n_other as f64).ln()).exp();
            let p1 = alpha / (alpha + (1.0 - alpha) * pred);
            self.rng.random::<f64>() < p1
        };
        self.state.slices[t].gamma[i] = value;
    }

    fn remove_cluster(&mut self, t: usize, j: usize) {
        let slice = &mut self.state.slices[t];
        let last = slice.mu.len() - 1;
        if j != last {
            for l in slice.labels.iter_mut() {
                if *l == last {
                    *l = j;
                }
            }
        }
        slice.mu.swap_remove(j);
        slice.sigma.swap_remove(j);
        self.summaries[t].swap_remove(j);
    }

    /// Neal's Algorithm 8 step (one auxiliary atom) for a free unit.
    pub fn update_label(&mut self, t: usize, i: usize) {
        let n_times = self.state.n_times();
        debug_assert!(!self.state.slices[t].gamma[i]);
        let old = self.state.slices[t].labels[i];
        self.eppf.remove_from(&mut self.summaries[t][old], i);
        let singleton = self.summaries[t][old].size == 0;
        let aux = if singleton {
            let s = &self.state.slices[t];
            let atom = (s.mu[old], s.sigma[old]);
            self.remove_cluster(t, old);
            atom
        } else {
            let theta = self.state.slices[t].theta;
            let mu = normal(&mut self.rng, theta, self.state.tau);
            let sigma = uniform_open(&mut self.rng, 0.0, self.config.prior.a_sigma);
            (mu, sigma)
        };
        let k = self.state.slices[t].n_clusters();

        // forward compatibility with ρ_{t+1} on its fixed units
        let mut forced = None;
        let mut blocked = vec![false; k];
        if t + 1 < n_times && self.state.slices[t + 1].gamma[i] {
            let next = &self.state.slices[t + 1];
            let labels = &self.state.slices[t].labels;
            for j in 0..labels.len() {
                if j == i || !next.gamma[j] {
                    continue;
                }
                if next.labels[j] == next.labels[i] {
                    forced = Some(labels[j]);
                    break;
                }
                blocked[labels[j]] = true;
            }
        }

        let choice = match forced {
            Some(h) => h,
            None => {
                let s = &self.state.slices[t];
                let mut w = Vec::with_capacity(k + 1);
                for h in 0..k {
                    w.push(if blocked[h] {
                        f64::NEG_INFINITY
                    } else {
                        self.eppf.log_seat_existing(&self.summaries[t][h], i)
                            + self.obs_log_density(i, t, s.mu[h], s.sigma[h])
                    });
                }
                w.push(self.eppf.log_seat_new(i) + self.obs_log_density(i, t, aux.0, aux.1));
                sample_log_weights(&w, &mut self.rng)
            }
        };
        if choice == k {
            let s = &mut self.state.slices[t];
            s.mu.push(aux.0);
            s.sigma.push(aux.1);
            self.summaries[t].push(self.eppf.empty_cluster());
        }
        self.state.slices[t].labels[i] = choice;
        self.eppf.add_to(&mut self.summaries[t][choice], i);
    }

    /// Conjugate draw `αₜ ~ Beta(a + Σγ, b + m − Σγ)`.
    pub fn update_alpha(&mut self, t: usize) {
        let slice = &self.state.slices[t];
        let m = slice.gamma.len() as f64;
        let s = slice.gamma.iter().filter(|&&g| g).count() as f64;
        let p = &self.config.prior;
        let beta = Beta::new(p.a_alpha + s, p.b_alpha + m - s).expect("positive shapes");
        self.state.slices[t].alpha = beta.sample(&mut self.rng);
    }

    fn numerical(&self, what: &str) -> Error {
        Error::Numerical {
            sweep: self.sweep + 1,
            message: format!("{what} produced a NaN acceptance ratio; state: {:?}", self.state),
        }
    }

    /// Metropolis accept/reject from a log ratio.
    fn accept(&mut self, log_ratio: f64, what: &str) -> Result<bool> {
        if log_ratio.is_nan() {
            return Err(self.numerical(what));
        }
        Ok(log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio)
    }

    /// Cluster means (conjugate) and scales (random walk) at every time point.
    pub fn update_atoms(&mut self) -> Result<()> {
        let a_sigma = self.config.prior.a_sigma;
        let step = self.config.sigma_step();
        for t in 0..self.state.n_times() {
            let k = self.state.slices[t].n_clusters();
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
            for (i, &l) in self.state.slices[t].labels.iter().enumerate() {
                members[l].push(i);
            }
            let theta = self.state.slices[t].theta;
            let tau2 = self.state.tau * self.state.tau;
            for (j, units) in members.iter().enumerate() {
                let sigma = self.state.slices[t].sigma[j];
                let mut prec = 1.0 / tau2;
                let mut lin = theta / tau2;
                for &i in units {
                    let (r, f) = self.residual(i, t);
                    let v = (sigma * sigma * f).max(VAR_FLOOR);
                    prec += 1.0 / v;
                    lin += r / v;
                }
                let mu = normal(&mut self.rng, lin / prec, prec.sqrt().recip());
                self.state.slices[t].mu[j] = mu;

                let prop = sigma + step * self.rng.sample::<f64, _>(StandardNormal);
                let ok = if prop > 0.0 && prop < a_sigma {
                    let ratio: f64 = units
                        .iter()
                        .map(|&i| {
                            self.obs_log_density(i, t, mu, prop)
                                - self.obs_log_density(i, t, mu, sigma)
                        })
                        .sum();
                    let ok = self.accept(ratio, "sigma")?;
                    if ok {
                        self.state.slices[t].sigma[j] = prop;
                    }
                    ok
                } else {
                    false
                };
                self.acceptance.sigma.record(ok);
            }
        }
        Ok(())
    }

    fn ar_var(&self) -> f64 {
        let s = &self.state;
        s.lambda * s.lambda * (1.0 - s.phi1 * s.phi1)
    }

    /// Log density of the `θ` sequence given `(φ₀, φ₁, λ)`.
    fn theta_log_density(&self, phi0: f64, phi1: f64, lambda: f64) -> f64 {
        let sl = &self.state.slices;
        let mut out = normal_log_density(sl[0].theta, phi0, lambda * lambda);
        let v = lambda * lambda * (1.0 - phi1 * phi1);
        for t in 1..sl.len() {
            out += normal_log_density(sl[t].theta, phi0 + phi1 * sl[t - 1].theta, v);
        }
        out
    }

    fn update_theta(&mut self) {
        let n_times = self.state.n_times();
        for t in 0..n_times {
            let s = &self.state;
            let (phi0, phi1) = (s.phi0, s.phi1);
            let v = self.ar_var();
            let (mut prec, mut lin);
            if t == 0 {
                let l2 = s.lambda * s.lambda;
                prec = 1.0 / l2;
                lin = phi0 / l2;
            } else {
                prec = 1.0 / v;
                lin = (phi0 + phi1 * s.slices[t - 1].theta) / v;
            }
            if t + 1 < n_times {
                prec += phi1 * phi1 / v;
                lin += phi1 * (s.slices[t + 1].theta - phi0) / v;
            }
            let tau2 = s.tau * s.tau;
            let mu = &s.slices[t].mu;
            prec += mu.len() as f64 / tau2;
            lin += mu.iter().sum::<f64>() / tau2;
            let draw = normal(&mut self.rng, lin / prec, prec.sqrt().recip());
            self.state.slices[t].theta = draw;
        }
    }

    fn atom_log_density(&self, tau: f64) -> f64 {
        let tau2 = tau * tau;
        self.state
            .slices
            .iter()
            .map(|s| s.mu.iter().map(|&m| normal_log_density(m, s.theta, tau2)).sum::<f64>())
            .sum()
    }

    fn update_tau(&mut self) -> Result<()> {
        let cur = self.state.tau;
        let prop = cur + self.config.tau_step() * self.rng.sample::<f64, _>(StandardNormal);
        let ok = if prop > 0.0 && prop < self.config.prior.a_tau {
            let ratio = self.atom_log_density(prop) - self.atom_log_density(cur);
            self.accept(ratio, "tau")?
        } else {
            false
        };
        if ok {
            self.state.tau = prop;
        }
        self.acceptance.tau.record(ok);
        Ok(())
    }

    fn update_phi0(&mut self) {
        let s = &self.state;
        let sl = &s.slices;
        let l2 = s.lambda * s.lambda;
        let v = self.ar_var();
        let mut prec = 1.0 / self.config.prior.s2 + 1.0 / l2;
        let mut lin = sl[0].theta / l2;
        for t in 1..sl.len() {
            prec += 1.0 / v;
            lin += (sl[t].theta - s.phi1 * sl[t - 1].theta) / v;
        }
        self.state.phi0 = normal(&mut self.rng, lin / prec, prec.sqrt().recip());
    }

    fn update_phi1(&mut self) -> Result<()> {
        let cur = self.state.phi1;
        let prop = cur + self.config.phi1_step() * self.rng.sample::<f64, _>(StandardNormal);
        let ok = if prop > -1.0 && prop < 1.0 {
            let (phi0, lambda) = (self.state.phi0, self.state.lambda);
            let ratio = self.theta_log_density(phi0, prop, lambda)
                - self.theta_log_density(phi0, cur, lambda);
            self.accept(ratio, "phi1")?
        } else {
            false
        };
        if ok {
            self.state.phi1 = prop;
        }
        self.acceptance.phi1.record(ok);
        Ok(())
    }

    fn update_lambda(&mut self) -> Result<()> {
        let cur = self.state.lambda;
        let prop = cur + self.config.lambda_step() * self.rng.sample::<f64, _>(StandardNormal);
        let ok = if prop > 0.0 && prop < self.config.prior.a_lambda {
            let (phi0, phi1) = (self.state.phi0, self.state.phi1);
            let ratio = self.theta_log_density(phi0, phi1, prop)
                - self.theta_log_density(phi0, phi1, cur);
            self.accept(ratio, "lambda")?
        } else {
            false
        };
        if ok {
            self.state.lambda = prop;
        }
        self.acceptance.lambda.record(ok);
        Ok(())
    }

    fn unit_ar_log_lik(&self, i: usize, eta: f64) -> f64 {
        let f = 1.0 - eta * eta;
        (1..self.state.n_times())
            .map(|t| {
                let r = self.data.y(i, t) - eta * self.data.y(i, t - 1);
                let sd = self.state.sigma_of(i, t);
                normal_log_density(r, self.state.mu_of(i, t), (sd * sd * f).max(VAR_FLOOR))
            })
            .sum()
    }

    fn update_eta(&mut self) -> Result<()> {
        let (a, b) = (self.config.prior.laplace_a, self.config.prior.laplace_b);
        let step = self.config.xi_step();
        for i in 0..self.state.m() {
            let eta = self.state.eta[i];
            let xi = eta_to_xi(eta);
            let xi_prop = xi + step * self.rng.sample::<f64, _>(StandardNormal);
            let eta_prop = xi_to_eta(xi_prop);
            let ratio = self.unit_ar_log_lik(i, eta_prop) - self.unit_ar_log_lik(i, eta)
                - ((xi_prop - a).abs() - (xi - a).abs()) / b;
            let ok = self.accept(ratio, "xi")?;
            if ok {
                self.state.eta[i] = eta_prop;
            }
            self.acceptance.xi.record(ok);
        }
        Ok(())
    }

    /// `θ`, `τ`, `φ₀`, `φ₁`, `λ` and `η` in turn (skipping held values).
    pub fn update_hyper(&mut self) -> Result<()> {
        if self.active.theta {
            self.update_theta();
        }
        if self.active.tau {
            self.update_tau()?;
        }
        if self.active.phi0 {
            self.update_phi0();
        }
        if self.active.phi1 {
            self.update_phi1()?;
        }
        if self.active.lambda {
            self.update_lambda()?;
        }
        if self.active.eta {
            self.update_eta()?;
        }
        Ok(())
    }
}
