//! Marginal partition laws: the Chinese restaurant process and the spatial
//! product partition model with a normal-inverse-Wishart similarity.
//!
//! The spatial model is only ever used through weight ratios. Where a
//! normalized probability of a partition of `n` units is needed (the
//! reallocation-indicator update), the product weight is divided by the CRP
//! normalizer `Γ(M + n) / Γ(M)`. That is the joint law of (partition,
//! coordinates) under the model in which the similarity is the marginal density
//! of the coordinates, which is sample-size consistent; all sampler steps only
//! see ratios of it.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// Spatial dimension of the similarity function.
pub const SPATIAL_DIM: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EppfKind {
    Crp,
    Sppm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EppfSpec {
    kind: EppfKind,
    mass: f64,
    nu0: f64,
    coords: Option<Arc<Vec<[f64; 2]>>>,
}

impl EppfSpec {
    pub fn crp(mass: f64) -> Result<Self> {
        check_mass(mass)?;
        Ok(EppfSpec {
            kind: EppfKind::Crp,
            mass,
            nu0: 0.0,
            coords: None,
        })
    }

    /// Spatial PPM over already standardized coordinates.
    pub fn sppm(mass: f64, nu0: f64, coords: Vec<[f64; 2]>) -> Result<Self> {
        check_mass(mass)?;
        if !(nu0 > (SPATIAL_DIM - 1) as f64) || !nu0.is_finite() {
            return Err(Error::invalid(format!(
                "similarity degrees of freedom must exceed {}, got {nu0}",
                SPATIAL_DIM - 1
            )));
        }
        if coords.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::invalid("spatial coordinates must be finite"));
        }
        Ok(EppfSpec {
            kind: EppfKind::Sppm,
            mass,
            nu0,
            coords: Some(Arc::new(coords)),
        })
    }

    pub fn kind(&self) -> EppfKind {
        self.kind
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn coords(&self) -> Option<&[[f64; 2]]> {
        self.coords.as_deref().map(|v| v.as_slice())
    }

    pub fn is_spatial(&self) -> bool {
        self.kind == EppfKind::Sppm
    }

    fn coord(&self, unit: usize) -> [f64; 2] {
        self.coords.as_ref().expect("spatial spec carries coordinates")[unit]
    }

    /// Empty cluster summary compatible with this law.
    pub fn empty_cluster(&self) -> ClusterSummary {
        ClusterSummary::default()
    }

    pub fn add_to(&self, cluster: &mut ClusterSummary, unit: usize) {
        cluster.size += 1;
        if self.is_spatial() {
            cluster.niw.push(self.coord(unit));
        }
    }

    pub fn remove_from(&self, cluster: &mut ClusterSummary, unit: usize) {
        debug_assert!(cluster.size > 0);
        cluster.size -= 1;
        if self.is_spatial() {
            if cluster.size == 0 {
                cluster.niw = NiwStats::default();
            } else {
                cluster.niw.pop(self.coord(unit));
            }
        }
    }

    /// Unnormalized log-weight for seating `unit` in an existing cluster.
    pub fn log_seat_existing(&self, cluster: &ClusterSummary, unit: usize) -> f64 {
        debug_assert!(cluster.size > 0);
        let cohesion = (cluster.size as f64).ln();
        match self.kind {
            EppfKind::Crp => cohesion,
            EppfKind::Sppm => {
                let mut with = cluster.niw.clone();
                with.push(self.coord(unit));
                cohesion + with.log_marginal(self.nu0) - cluster.niw.log_marginal(self.nu0)
            }
        }
    }

    /// Unnormalized log-weight for opening a new cluster with `unit`.
    pub fn log_seat_new(&self, unit: usize) -> f64 {
        match self.kind {
            EppfKind::Crp => self.mass.ln(),
            EppfKind::Sppm => {
                let mut single = NiwStats::default();
                single.push(self.coord(unit));
                self.mass.ln() + single.log_marginal(self.nu0)
            }
        }
    }

    /// Log-probability of a partition of the listed units (`labels[k]` is the
    /// cluster of `units[k]`). Exact for the CRP; for the spatial model this is
    /// the product weight over the CRP normalizer (see module docs).
    pub fn log_prob_of_units(&self, labels: &[usize], units: &[usize]) -> f64 {
        debug_assert_eq!(labels.len(), units.len());
        if labels.is_empty() {
            return 0.0;
        }
        let part = Partition::from_usize_labels(labels);
        let normalizer = ln_gamma(self.mass + labels.len() as f64) - ln_gamma(self.mass);
        let cohesion: f64 = part
            .cluster_sizes()
            .iter()
            .map(|&n| self.mass.ln() + ln_gamma(n as f64))
            .sum();
        let similarity = match self.kind {
            EppfKind::Crp => 0.0,
            EppfKind::Sppm => {
                let mut stats = vec![NiwStats::default(); part.n_clusters()];
                for (&l, &u) in part.labels().iter().zip(units) {
                    stats[l].push(self.coord(u));
                }
                stats.iter().map(|s| s.log_marginal(self.nu0)).sum()
            }
        };
        cohesion + similarity - normalizer
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if mass > 0.0 && mass.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "concentration must be positive and finite, got {mass}"
        )))
    }
}

/// Running size and coordinate statistics for one cluster.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClusterSummary {
    pub size: usize,
    pub niw: NiwStats,
}

/// Log of the CRP exchangeable partition probability function.
pub fn crp_log_prob(p: &Partition, mass: f64) -> Result<f64> {
    check_mass(mass)?;
    let n = p.n_units();
    if n == 0 {
        return Ok(0.0);
    }
    let k = p.n_clusters() as f64;
    let sizes: f64 = p.cluster_sizes().iter().map(|&s| ln_gamma(s as f64)).sum();
    Ok(k * mass.ln() + ln_gamma(mass) - ln_gamma(mass + n as f64) + sizes)
}

/// Sufficient statistics of a set of 2-d points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NiwStats {
    n: usize,
    sum: [f64; 2],
    // xx, xy, yy
    outer: [f64; 3],
}

impl NiwStats {
    pub fn from_points(points: &[[f64; 2]]) -> Self {
        let mut s = NiwStats::default();
        for &p in points {
            s.push(p);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn push(&mut self, p: [f64; 2]) {
        self.n += 1;
        self.sum[0] += p[0];
        self.sum[1] += p[1];
        self.outer[0] += p[0] * p[0];
        self.outer[1] += p[0] * p[1];
        self.outer[2] += p[1] * p[1];
    }

    pub fn pop(&mut self, p: [f64; 2]) {
        debug_assert!(self.n > 0);
        self.n -= 1;
        if self.n == 0 {
            *self = NiwStats::default();
            return;
        }
        self.sum[0] -= p[0];
        self.sum[1] -= p[1];
        self.outer[0] -= p[0] * p[0];
        self.outer[1] -= p[0] * p[1];
        self.outer[2] -= p[1] * p[1];
    }

    /// Log marginal density of the points under a bivariate normal with
    /// NIW(mean 0, κ = 1, ν₀, Ψ = I) prior on (mean, covariance).
    pub fn log_marginal(&self, nu0: f64) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        let d = SPATIAL_DIM as f64;
        let kappa_n = 1.0 + n;
        let nu_n = nu0 + n;
        // Ψn = I + Σ x xᵀ − (Σx)(Σx)ᵀ / (κ0 + n)
        let a = 1.0 + self.outer[0] - self.sum[0] * self.sum[0] / kappa_n;
        let b = self.outer[1] - self.sum[0] * self.sum[1] / kappa_n;
        let c = 1.0 + self.outer[2] - self.sum[1] * self.sum[1] / kappa_n;
        let log_det = (a * c - b * b).ln();
        -0.5 * n * d * PI.ln() + ln_mv_gamma2(0.5 * nu_n) - ln_mv_gamma2(0.5 * nu0)
            - 0.5 * nu_n * log_det
            + 0.5 * d * (1.0 / kappa_n).ln()
    }
}

fn ln_mv_gamma2(a: f64) -> f64 {
    0.5 * PI.ln() + ln_gamma(a) + ln_gamma(a - 0.5)
}

/// Closed-form NIW marginal likelihood of a point set; the empty set has log
/// marginal 0.
pub fn niw_log_marginal(points: &[[f64; 2]], nu0: f64) -> Result<f64> {
    if points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::invalid("coordinates must be finite"));
    }
    if !(nu0 > (SPATIAL_DIM - 1) as f64) {
        return Err(Error::invalid(format!(
            "degrees of freedom must exceed {}, got {nu0}",
            SPATIAL_DIM - 1
        )));
    }
    Ok(NiwStats::from_points(points).log_marginal(nu0))
}

/// Unnormalized log product of cohesion `M (|S| - 1)!` and similarity over
/// the clusters of `p` (units index the spec's coordinates).
pub fn sppm_log_weight(p: &Partition, spec: &EppfSpec) -> Result<f64> {
    let coords = match (spec.kind, spec.coords()) {
        (EppfKind::Sppm, Some(c)) => c,
        _ => return Err(Error::invalid("spatial weight requires an SPPM spec with coordinates")),
    };
    if coords.len() != p.n_units() {
        return Err(Error::invalid(format!(
            "partition has {} units but {} coordinates were supplied",
            p.n_units(),
            coords.len()
        )));
    }
    let mut stats = vec![NiwStats::default(); p.n_clusters()];
    for (i, &l) in p.labels().iter().enumerate() {
        stats[l].push(coords[i]);
    }
    Ok(stats
        .iter()
        .map(|s| spec.mass.ln() + ln_gamma(s.len() as f64) + s.log_marginal(spec.nu0))
        .sum())
}

/// Log-weights for seating `new_unit` into each cluster of `partial` (a
/// partition of the units listed in `seated`) followed by a new cluster.
pub fn seating_log_weights(
    partial: &Partition,
    seated: &[usize],
    new_unit: usize,
    spec: &EppfSpec,
) -> Result<Vec<f64>> {
    if partial.n_units() != seated.len() {
        return Err(Error::invalid("seated unit list does not match the partial partition"));
    }
    if seated.contains(&new_unit) {
        return Err(Error::invalid(format!("unit {new_unit} is already seated")));
    }
    let mut clusters = vec![spec.empty_cluster(); partial.n_clusters()];
    for (&l, &u) in partial.labels().iter().zip(seated) {
        spec.add_to(&mut clusters[l], u);
    }
    let mut out: Vec<f64> = clusters
        .iter()
        .map(|c| spec.log_seat_existing(c, new_unit))
        .collect();
    out.push(spec.log_seat_new(new_unit));
    Ok(out)
}

/// Per-axis standardization applied to raw coordinates at ingestion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: [f64; 2],
    pub sd: [f64; 2],
}

impl Standardization {
    pub fn fit(raw: &[[f64; 2]]) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::invalid("at least two locations are needed to standardize"));
        }
        let n = raw.len() as f64;
        let mut mean = [0.0; 2];
        let mut sd = [0.0; 2];
        for axis in 0..2 {
            mean[axis] = raw.iter().map(|p| p[axis]).sum::<f64>() / n;
            let ss: f64 = raw.iter().map(|p| (p[axis] - mean[axis]).powi(2)).sum();
            sd[axis] = (ss / (n - 1.0)).sqrt();
            if !(sd[axis] > 0.0) {
                return Err(Error::invalid("coordinates have zero spread along an axis"));
            }
        }
        Ok(Standardization { mean, sd })
    }

    pub fn apply(&self, raw: &[[f64; 2]]) -> Vec<[f64; 2]> {
        raw.iter()
            .map(|p| {
                [
                    (p[0] - self.mean[0]) / self.sd[0],
                    (p[1] - self.mean[1]) / self.sd[1],
                ]
            })
            .collect()
    }

    pub fn invert(&self, std: [f64; 2]) -> [f64; 2] {
        [
            std[0] * self.sd[0] + self.mean[0],
            std[1] * self.sd[1] + self.mean[1],
        ]
    }
}
