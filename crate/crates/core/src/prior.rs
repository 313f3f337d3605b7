//! Forward simulation of the temporal partition prior, exact one-step
//! transition tables by enumeration, and lagged-ARI summaries.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eppf::{ClusterSummary, EppfSpec};
use crate::error::{Error, Result};
use crate::partition::{
    adjusted_rand_index, compatible_on, enumerate_partitions, GammaVector, Partition,
};
use crate::rng::substream;
use crate::stats::{mean_and_se, sample_log_weights};

/// Largest unit count accepted by [`exact_conditional_table`].
pub const MAX_EXACT_TABLE_UNITS: usize = 10;

#[derive(Clone, Debug)]
pub struct TrpmParams {
    pub m: usize,
    pub n_times: usize,
    /// One entry per time point; the first is unused.
    pub alpha: Vec<f64>,
    pub eppf: EppfSpec,
}

impl TrpmParams {
    pub fn new(m: usize, n_times: usize, alpha: Vec<f64>, eppf: EppfSpec) -> Result<Self> {
        let p = TrpmParams {
            m,
            n_times,
            alpha,
            eppf,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same dependence parameter at every time point.
    pub fn constant(m: usize, n_times: usize, alpha: f64, eppf: EppfSpec) -> Result<Self> {
        Self::new(m, n_times, vec![alpha; n_times], eppf)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n_times == 0 {
            return Err(Error::invalid("need at least one unit and one time point"));
        }
        if self.alpha.len() != self.n_times {
            return Err(Error::invalid(format!(
                "expected {} dependence parameters, got {}",
                self.n_times,
                self.alpha.len()
            )));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::invalid(format!("dependence parameter {a} outside [0, 1]")));
        }
        if let Some(c) = self.eppf.coords() {
            if c.len() != self.m {
                return Err(Error::invalid(format!(
                    "{} coordinates supplied for {} units",
                    c.len(),
                    self.m
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PriorDraw {
    pub partitions: Vec<Partition>,
    pub gammas: Vec<GammaVector>,
}

/// Seat every unit with `fixed[i] == false` into the clusters formed by the
/// fixed units (grouped by `prev_labels`), one at a time in random order.
pub(crate) fn seat_free_units<R: Rng + ?Sized>(
    prev_labels: Option<&[usize]>,
    fixed: &[bool],
    spec: &EppfSpec,
    rng: &mut R,
) -> Partition {
    let m = fixed.len();
    let mut labels = vec![usize::MAX; m];
    let mut clusters: Vec<ClusterSummary> = Vec::new();
    if let Some(prev) = prev_labels {
        let bound = prev.iter().copied().max().map_or(0, |x| x + 1);
        let mut slot = vec![usize::MAX; bound];
        for i in (0..m).filter(|&i| fixed[i]) {
            let l = prev[i];
            if slot[l] == usize::MAX {
                slot[l] = clusters.len();
                clusters.push(spec.empty_cluster());
            }
            labels[i] = slot[l];
            spec.add_to(&mut clusters[slot[l]], i);
        }
    }
    let mut free: Vec<usize> = (0..m).filter(|&i| !fixed[i]).collect();
    free.shuffle(rng);
    let mut weights = Vec::with_capacity(m + 1);
    for &i in &free {
        weights.clear();
        weights.extend(clusters.iter().map(|c| spec.log_seat_existing(c, i)));
        weights.push(spec.log_seat_new(i));
        let h = sample_log_weights(&weights, rng);
        if h == clusters.len() {
            clusters.push(spec.empty_cluster());
        }
        spec.add_to(&mut clusters[h], i);
        labels[i] = h;
    }
    Partition::from_usize_labels(&labels)
}

/// One draw of `(γ₁, ρ₁, …, γ_T, ρ_T)` using the supplied stream for every step.
pub fn sample_joint_prior_with<R: Rng + ?Sized>(params: &TrpmParams, rng: &mut R) -> PriorDraw {
    let m = params.m;
    let mut partitions = Vec::with_capacity(params.n_times);
    let mut gammas = Vec::with_capacity(params.n_times);
    let none = vec![false; m];
    partitions.push(seat_free_units(None, &none, &params.eppf, rng));
    gammas.push(GammaVector::zeros(m, 0));
    for t in 1..params.n_times {
        let alpha = params.alpha[t];
        let bits: Vec<bool> = (0..m).map(|_| rng.random_bool(alpha)).collect();
        let prev = partitions[t - 1].labels();
        let rho = seat_free_units(Some(prev), &bits, &params.eppf, rng);
        debug_assert!(compatible_on(rho.labels(), prev, &bits));
        partitions.push(rho);
        gammas.push(GammaVector::new(bits, t).expect("t > 0"));
    }
    PriorDraw { partitions, gammas }
}

/// Draw from the joint prior; time step `t` of replicate `r` uses stream `(seed, r, t)`.
pub fn sample_joint_prior_replicate(params: &TrpmParams, seed: u64, replicate: u64) -> PriorDraw {
    let m = params.m;
    let none = vec![false; m];
    let mut partitions = Vec::with_capacity(params.n_times);
    let mut gammas = Vec::with_capacity(params.n_times);
    let mut rng = substream(seed, replicate, 0);
    partitions.push(seat_free_units(None, &none, &params.eppf, &mut rng));
    gammas.push(GammaVector::zeros(m, 0));
    for t in 1..params.n_times {
        let mut rng = substream(seed, replicate, t as u64);
        let alpha = params.alpha[t];
        let bits: Vec<bool> = (0..m).map(|_| rng.random_bool(alpha)).collect();
        let prev = partitions[t - 1].labels();
        let rho = seat_free_units(Some(prev), &bits, &params.eppf, &mut rng);
        debug_assert!(compatible_on(rho.labels(), prev, &bits));
        partitions.push(rho);
        gammas.push(GammaVector::new(bits, t).expect("t > 0"));
    }
    PriorDraw { partitions, gammas }
}

pub fn sample_joint_prior(params: &TrpmParams, seed: u64) -> PriorDraw {
    sample_joint_prior_replicate(params, seed, 0)
}

/// Exact transition distribution `Pr(ρ_t | ρ_{t-1})` for a single dependence
/// parameter, by summing over all `2^m` indicator vectors and all partitions.
/// Entries follow [`enumerate_partitions`] order.
pub fn exact_conditional_table(
    rho_prev: &Partition,
    alpha: f64,
    eppf: &EppfSpec,
) -> Result<Vec<(Partition, f64)>> {
    let m = rho_prev.n_units();
    if m > MAX_EXACT_TABLE_UNITS {
        return Err(Error::ResourceLimit(format!(
            "exact transition table over {m} units exceeds the limit of {MAX_EXACT_TABLE_UNITS}"
        )));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("dependence parameter {alpha} outside [0, 1]")));
    }
    if let Some(c) = eppf.coords() {
        if c.len() != m {
            return Err(Error::invalid("coordinate count does not match the partition"));
        }
    }
    let parts = enumerate_partitions(m)?;
    let units: Vec<usize> = (0..m).collect();
    let weights: Vec<f64> = parts
        .iter()
        .map(|p| eppf.log_prob_of_units(p.labels(), &units).exp())
        .collect();
    let mut table = vec![0.0; parts.len()];
    let mut mask = vec![false; m];
    let mut compat = vec![false; parts.len()];
    for bits in 0u32..(1u32 << m) {
        let n_fixed = bits.count_ones() as i32;
        let prob_gamma = alpha.powi(n_fixed) * (1.0 - alpha).powi(m as i32 - n_fixed);
        if prob_gamma == 0.0 {
            continue;
        }
        for (i, slot) in mask.iter_mut().enumerate() {
            *slot = bits >> i & 1 == 1;
        }
        let mut z = 0.0;
        for (k, p) in parts.iter().enumerate() {
            compat[k] = compatible_on(p.labels(), rho_prev.labels(), &mask);
            if compat[k] {
                z += weights[k];
            }
        }
        for k in 0..parts.len() {
            if compat[k] {
                table[k] += prob_gamma * weights[k] / z;
            }
        }
    }
    Ok(parts.into_iter().zip(table).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagStat {
    pub lag: usize,
    pub mean_ari: f64,
    /// Monte Carlo standard error; absent with a single draw.
    pub se: Option<f64>,
    pub n_draws: usize,
}

/// Per-draw average of `ARI(ρ_t, ρ_{t+ℓ})` over valid `t`.
pub fn lagged_ari_of_sequence(partitions: &[Partition]) -> Vec<f64> {
    let n = partitions.len();
    (1..n)
        .map(|lag| {
            let total: f64 = (0..n - lag)
                .map(|t| {
                    adjusted_rand_index(&partitions[t], &partitions[t + lag])
                        .expect("partitions share a unit count")
                })
                .sum();
            total / (n - lag) as f64
        })
        .collect()
}

/// Monte Carlo means of lagged ARI over independent prior draws.
pub fn lagged_ari_summary(params: &TrpmParams, n_draws: usize, seed: u64) -> Result<Vec<LagStat>> {
    params.validate()?;
    if n_draws == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    let per_draw: Vec<Vec<f64>> = (0..n_draws as u64)
        .into_par_iter()
        .map(|r| lagged_ari_of_sequence(&sample_joint_prior_replicate(params, seed, r).partitions))
        .collect();
    let n_lags = params.n_times.saturating_sub(1);
    Ok((0..n_lags)
        .map(|l| {
            let column: Vec<f64> = per_draw.iter().map(|d| d[l]).collect();
            let (mean_ari, se) = mean_and_se(&column);
            LagStat {
                lag: l + 1,
                mean_ari,
                se,
                n_draws,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eppf::crp_log_prob;
    use crate::rng::stream;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::HashMap;

    fn part(l: &[u8]) -> Partition {
        Partition::canonicalize(l).unwrap()
    }

    #[test]
    fn full_dependence_freezes_partition() {
        let params = TrpmParams::constant(12, 6, 1.0, EppfSpec::crp(1.0).unwrap()).unwrap();
        for r in 0..20 {
            let draw = sample_joint_prior_replicate(&params, 3, r);
            for t in 1..6 {
                assert_eq!(draw.partitions[t], draw.partitions[0]);
                assert_eq!(draw.gammas[t].n_free(), 0);
            }
            assert_eq!(draw.gammas[0].n_fixed(), 0);
        }
    }

    #[test]
    fn draws_are_deterministic_and_compatible() {
        let params = TrpmParams::constant(15, 5, 0.6, EppfSpec::crp(0.5).unwrap()).unwrap();
        let a = sample_joint_prior(&params, 99);
        let b = sample_joint_prior(&params, 99);
        assert_eq!(a, b);
        for t in 1..5 {
            assert!(crate::partition::is_compatible(
                &a.partitions[t],
                &a.partitions[t - 1],
                &a.gammas[t]
            )
            .unwrap());
        }
        let mut rng = stream(5, 0);
        let c = sample_joint_prior_with(&params, &mut rng);
        assert_eq!(c.partitions.len(), 5);
    }

    #[test]
    fn params_validation() {
        let crp = EppfSpec::crp(1.0).unwrap();
        assert!(TrpmParams::new(3, 2, vec![0.5], crp.clone()).is_err());
        assert!(TrpmParams::new(3, 2, vec![0.0, 1.5], crp.clone()).is_err());
        assert!(TrpmParams::new(0, 2, vec![0.0, 0.5], crp).is_err());
    }

    fn chi_square_p(counts: &[usize], probs: &[f64]) -> f64 {
        let n: usize = counts.iter().sum();
        let stat: f64 = counts
            .iter()
            .zip(probs)
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
    }

    #[test]
    fn independence_at_zero_dependence() {
        let params = TrpmParams::constant(3, 2, 0.0, EppfSpec::crp(1.0).unwrap()).unwrap();
        let parts = enumerate_partitions(3).unwrap();
        let index: HashMap<Partition, usize> =
            parts.iter().cloned().enumerate().map(|(k, p)| (p, k)).collect();
        let mut counts = vec![0usize; 25];
        for r in 0..200_000u64 {
            let d = sample_joint_prior_replicate(&params, 11, r);
            counts[index[&d.partitions[0]] * 5 + index[&d.partitions[1]]] += 1;
        }
        let marg: Vec<f64> = parts.iter().map(|p| crp_log_prob(p, 1.0).unwrap().exp()).collect();
        let probs: Vec<f64> = (0..25).map(|k| marg[k / 5] * marg[k % 5]).collect();
        let p = chi_square_p(&counts, &probs);
        assert!(p > 0.001, "chi-square p = {p}");
    }

    #[test]
    fn table_one_row_b_by_simulation() {
        let params = TrpmParams::constant(3, 2, 0.5, EppfSpec::crp(1.0).unwrap()).unwrap();
        let b = part(&[1, 1, 2]);
        let (mut hits, mut total) = (0usize, 0usize);
        for r in 0..300_000u64 {
            let d = sample_joint_prior_replicate(&params, 21, r);
            if d.partitions[0] == b {
                total += 1;
                hits += usize::from(d.partitions[1] == b);
            }
        }
        let p_hat = hits as f64 / total as f64;
        let target = (1.0 + 3.0 * 0.25 + 2.0 * 0.125) / 6.0;
        let se = (target * (1.0 - target) / total as f64).sqrt();
        assert!((p_hat - target).abs() < 3.0 * se, "{p_hat} vs {target}");
    }

    #[test]
    fn exact_table_examples() {
        let crp = EppfSpec::crp(1.0).unwrap();
        let a = part(&[1, 1, 1]);
        for &alpha in &[0.0, 0.3, 0.8, 1.0] {
            let table = exact_conditional_table(&a, alpha, &crp).unwrap();
            let total: f64 = table.iter().map(|e| e.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let a2 = alpha * alpha;
            let a3 = a2 * alpha;
            assert!((table[0].1 - 2.0 / 6.0 * (1.0 + 3.0 * a2 - a3)).abs() < 1e-12);
            assert!((table[4].1 - 1.0 / 6.0 * (1.0 - 3.0 * a2 + 2.0 * a3)).abs() < 1e-12);
        }
        for prev in enumerate_partitions(4).unwrap() {
            let table = exact_conditional_table(&prev, 0.0, &EppfSpec::crp(0.7).unwrap()).unwrap();
            for (p, prob) in table {
                assert!((prob - crp_log_prob(&p, 0.7).unwrap().exp()).abs() < 1e-12);
            }
        }
        assert!(matches!(
            exact_conditional_table(&Partition::one_cluster(11), 0.5, &crp),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn lagged_ari_single_draw_has_no_se() {
        let params = TrpmParams::constant(6, 4, 0.5, EppfSpec::crp(1.0).unwrap()).unwrap();
        let s = lagged_ari_summary(&params, 1, 4).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|l| l.se.is_none() && l.n_draws == 1));
        assert!(lagged_ari_summary(&params, 0, 4).is_err());
    }

    #[test]
    fn lagged_ari_independent_of_thread_count() {
        let params = TrpmParams::constant(8, 4, 0.5, EppfSpec::crp(1.0).unwrap()).unwrap();
        let a = lagged_ari_summary(&params, 200, 4).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| lagged_ari_summary(&params, 200, 4).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn zero_dependence_matches_iid_baseline() {
        let params = TrpmParams::constant(20, 5, 0.0, EppfSpec::crp(0.5).unwrap()).unwrap();
        let summary = lagged_ari_summary(&params, 4000, 8).unwrap();
        // independent pairs of CRP draws
        let single = TrpmParams::constant(20, 1, 0.0, EppfSpec::crp(0.5).unwrap()).unwrap();
        let base: Vec<f64> = (0..4000u64)
            .map(|r| {
                let x = sample_joint_prior_replicate(&single, 1234, 2 * r);
                let y = sample_joint_prior_replicate(&single, 1234, 2 * r + 1);
                adjusted_rand_index(&x.partitions[0], &y.partitions[0]).unwrap()
            })
            .collect();
        let (bm, bse) = mean_and_se(&base);
        for l in &summary {
            let se = (l.se.unwrap().powi(2) + bse.unwrap().powi(2)).sqrt();
            assert!((l.mean_ari - bm).abs() < 3.0 * se, "lag {} {} vs {}", l.lag, l.mean_ari, bm);
        }
    }

    /// Exact law of sequential seating for the free units, averaged over all
    /// insertion orders.
    fn seating_law(prev: &Partition, fixed: &[bool], spec: &EppfSpec) -> HashMap<Partition, f64> {
        fn recurse(
            labels: &mut Vec<usize>,
            clusters: &mut Vec<ClusterSummary>,
            order: &[usize],
            prob: f64,
            spec: &EppfSpec,
            out: &mut HashMap<Partition, f64>,
        ) {
            let Some((&i, rest)) = order.split_first() else {
                *out.entry(Partition::from_usize_labels(labels)).or_default() += prob;
                return;
            };
            let mut w: Vec<f64> = clusters.iter().map(|c| spec.log_seat_existing(c, i)).collect();
            w.push(spec.log_seat_new(i));
            let z = crate::stats::log_sum_exp(&w);
            for h in 0..w.len() {
                let p = (w[h] - z).exp();
                if h == clusters.len() {
                    clusters.push(spec.empty_cluster());
                }
                spec.add_to(&mut clusters[h], i);
                labels[i] = h;
                recurse(labels, clusters, rest, prob * p, spec, out);
                spec.remove_from(&mut clusters[h], i);
                if clusters[h].size == 0 {
                    clusters.pop();
                }
            }
        }
        let m = fixed.len();
        let mut labels = vec![usize::MAX; m];
        let mut clusters: Vec<ClusterSummary> = Vec::new();
        let mut slot = HashMap::new();
        for i in (0..m).filter(|&i| fixed[i]) {
            let next = clusters.len();
            let h = *slot.entry(prev.label(i)).or_insert(next);
            if h == clusters.len() {
                clusters.push(spec.empty_cluster());
            }
            spec.add_to(&mut clusters[h], i);
            labels[i] = h;
        }
        let free: Vec<usize> = (0..m).filter(|&i| !fixed[i]).collect();
        let mut orders = vec![free.clone()];
        if free.len() == 2 {
            orders.push(vec![free[1], free[0]]);
        } else if free.len() == 3 {
            orders.clear();
            for a in 0..3 {
                for b in 0..3 {
                    for c in 0..3 {
                        if a != b && b != c && a != c {
                            orders.push(vec![free[a], free[b], free[c]]);
                        }
                    }
                }
            }
        }
        let mut out = HashMap::new();
        let weight = 1.0 / orders.len() as f64;
        for order in &orders {
            recurse(&mut labels, &mut clusters, order, weight, spec, &mut out);
        }
        out
    }

    fn target_law(prev: &Partition, fixed: &[bool], spec: &EppfSpec) -> HashMap<Partition, f64> {
        let m = fixed.len();
        let units: Vec<usize> = (0..m).collect();
        let mut out = HashMap::new();
        let mut z = 0.0;
        for p in enumerate_partitions(m).unwrap() {
            if compatible_on(p.labels(), prev.labels(), fixed) {
                let w = spec.log_prob_of_units(p.labels(), &units).exp();
                z += w;
                out.insert(p, w);
            }
        }
        out.values_mut().for_each(|v| *v /= z);
        out
    }

    fn total_variation(a: &HashMap<Partition, f64>, b: &HashMap<Partition, f64>) -> f64 {
        let mut keys: Vec<&Partition> = a.keys().chain(b.keys()).collect();
        keys.sort();
        keys.dedup();
        0.5 * keys
            .iter()
            .map(|k| (a.get(*k).unwrap_or(&0.0) - b.get(*k).unwrap_or(&0.0)).abs())
            .sum::<f64>()
    }

    #[test]
    fn crp_seating_is_exact_for_every_fixed_set() {
        let spec = EppfSpec::crp(1.3).unwrap();
        for prev in enumerate_partitions(3).unwrap() {
            for bits in 0u8..8 {
                let fixed: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
                let tv = total_variation(
                    &seating_law(&prev, &fixed, &spec),
                    &target_law(&prev, &fixed, &spec),
                );
                assert!(tv < 1e-12, "tv {tv}");
            }
        }
    }

    #[test]
    fn spatial_seating_against_enumeration() {
        let specs = [
            EppfSpec::sppm(1.0, 5.0, vec![[0.4, -0.2]; 3]).unwrap(),
            EppfSpec::sppm(1.0, 5.0, vec![[0.0, 0.0], [0.3, 0.1], [2.0, -1.5]]).unwrap(),
        ];
        for spec in &specs {
            let mut worst: f64 = 0.0;
            for prev in enumerate_partitions(3).unwrap() {
                for bits in 0u8..8 {
                    let fixed: Vec<bool> = (0..3).map(|i| bits >> i & 1 == 1).collect();
                    let tv = total_variation(
                        &seating_law(&prev, &fixed, spec),
                        &target_law(&prev, &fixed, spec),
                    );
                    // a single free unit is seated from its exact conditional
                    if bits.count_ones() >= 2 {
                        assert!(tv < 1e-12, "tv {tv}");
                    }
                    worst = worst.max(tv);
                }
            }
            println!("spatial seating, worst total variation vs enumeration: {worst:.4}");
            assert!(worst < 0.1);
        }
    }
}
