//! Partition values and the restriction/compatibility algebra used by every
//! sampler in the crate.
//!
//! A [`Partition`] of `m` units is stored as a label vector in first-appearance
//! canonical form: unit 0 has label 0, and label `j + 1` never appears before
//! label `j`. With that convention two partitions are equal as set partitions
//! exactly when their label vectors are equal.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest unit count accepted by [`enumerate_partitions`] (Bell(12) = 4 213 597).
pub const MAX_ENUMERATION_UNITS: usize = 12;

const NONE: usize = usize::MAX;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    n_clusters: usize,
}

impl Partition {
    /// Relabel an arbitrary label vector by order of first appearance.
    pub fn canonicalize<T: Copy + Eq + Hash>(raw: &[T]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("cannot canonicalize an empty label vector"));
        }
        Ok(Self::from_raw_unchecked(raw))
    }

    pub(crate) fn from_raw_unchecked<T: Copy + Eq + Hash>(raw: &[T]) -> Self {
        let mut map: HashMap<T, usize> = HashMap::with_capacity(raw.len().min(64));
        let labels = raw
            .iter()
            .map(|x| {
                let next = map.len();
                *map.entry(*x).or_insert(next)
            })
            .collect();
        Partition {
            labels,
            n_clusters: map.len(),
        }
    }

    /// Relabel a vector of small non-negative labels without hashing.
    pub(crate) fn from_usize_labels(raw: &[usize]) -> Self {
        let bound = raw.iter().copied().max().map_or(0, |x| x + 1);
        let mut map = vec![NONE; bound];
        let mut next = 0;
        let labels = raw
            .iter()
            .map(|&x| {
                if map[x] == NONE {
                    map[x] = next;
                    next += 1;
                }
                map[x]
            })
            .collect();
        Partition {
            labels,
            n_clusters: next,
        }
    }

    /// The partition of zero units.
    pub fn empty() -> Self {
        Partition {
            labels: Vec::new(),
            n_clusters: 0,
        }
    }

    /// Every unit in one cluster.
    pub fn one_cluster(m: usize) -> Self {
        Partition {
            labels: vec![0; m],
            n_clusters: usize::from(m > 0),
        }
    }

    /// Every unit in its own cluster.
    pub fn singletons(m: usize) -> Self {
        Partition {
            labels: (0..m).collect(),
            n_clusters: m,
        }
    }

    /// Zero-based canonical labels.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// One-based canonical labels, as displayed in reports and files.
    pub fn one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l + 1).collect()
    }

    pub fn n_units(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn label(&self, unit: usize) -> usize {
        self.labels[unit]
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Units of each cluster, in increasing unit order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn same_cluster(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Induced partition on the kept units (sorted, duplicates ignored).
    pub fn restrict(&self, keep: &[usize]) -> Result<Partition> {
        let m = self.n_units();
        if let Some(&bad) = keep.iter().find(|&&i| i >= m) {
            return Err(Error::invalid(format!(
                "restriction index {bad} out of range for {m} units"
            )));
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let raw: Vec<usize> = keep.iter().map(|&i| self.labels[i]).collect();
        Ok(Partition::from_usize_labels(&raw))
    }

    /// Restriction to the units with `mask[i] == true`.
    pub fn restrict_mask(&self, mask: &[bool]) -> Partition {
        debug_assert_eq!(mask.len(), self.n_units());
        let raw: Vec<usize> = self
            .labels
            .iter()
            .zip(mask)
            .filter_map(|(&l, &k)| k.then_some(l))
            .collect();
        Partition::from_usize_labels(&raw)
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition{:?}", self.one_based())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|l| l.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Reallocation indicators for one time point; `true` means the unit keeps
/// its cluster relation from the previous time point.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GammaVector {
    gamma: Vec<bool>,
    t: usize,
}

impl GammaVector {
    /// `t` is zero-based; at `t == 0` every entry must be `false`.
    pub fn new(gamma: Vec<bool>, t: usize) -> Result<Self> {
        if t == 0 && gamma.iter().any(|&g| g) {
            return Err(Error::invalid(
                "reallocation indicators at the first time point must all be zero",
            ));
        }
        Ok(GammaVector { gamma, t })
    }

    pub fn zeros(m: usize, t: usize) -> Self {
        GammaVector {
            gamma: vec![false; m],
            t,
        }
    }

    pub fn from_bits(bits: &[u8], t: usize) -> Result<Self> {
        Self::new(bits.iter().map(|&b| b != 0).collect(), t)
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.gamma
    }

    pub fn time(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.gamma[i]
    }

    /// Number of units flagged for reallocation.
    pub fn n_free(&self) -> usize {
        self.gamma.iter().filter(|&&g| !g).count()
    }

    pub fn n_fixed(&self) -> usize {
        self.gamma.len() - self.n_free()
    }
}

/// Pair-counting adjusted Rand index.
///
/// When the chance-corrected denominator vanishes (both partitions all
/// singletons, or both a single cluster, or fewer than two units) the index is
/// 1.0 for identical partitions and 0.0 otherwise.
pub fn adjusted_rand_index(p: &Partition, q: &Partition) -> Result<f64> {
    let m = p.n_units();
    if m != q.n_units() {
        return Err(Error::invalid(format!(
            "partition sizes differ: {m} vs {}",
            q.n_units()
        )));
    }
    let (kp, kq) = (p.n_clusters(), q.n_clusters());
    let mut table = vec![0u64; kp * kq];
    for (&a, &b) in p.labels.iter().zip(&q.labels) {
        table[a * kq + b] += 1;
    }
    let choose2 = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let index: f64 = table.iter().map(|&n| choose2(n)).sum();
    let sum_a: f64 = p.cluster_sizes().iter().map(|&n| choose2(n as u64)).sum();
    let sum_b: f64 = q.cluster_sizes().iter().map(|&n| choose2(n as u64)).sum();
    let total = choose2(m as u64);
    let identical = p == q;
    if total == 0.0 {
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom.abs() < 1e-12 {
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// True when the two partitions agree, as set partitions, on the units with
/// `gamma = 1`.
pub fn is_compatible(rho_t: &Partition, rho_prev: &Partition, gamma: &GammaVector) -> Result<bool> {
    let m = rho_t.n_units();
    if rho_prev.n_units() != m || gamma.len() != m {
        return Err(Error::invalid(format!(
            "size mismatch: rho_t has {m} units, rho_prev {}, gamma {}",
            rho_prev.n_units(),
            gamma.len()
        )));
    }
    Ok(compatible_on(
        rho_t.labels(),
        rho_prev.labels(),
        gamma.as_slice(),
    ))
}

/// Compatibility on raw label vectors: the label map restricted to masked
/// units must be a bijection.
pub(crate) fn compatible_on(labels_t: &[usize], labels_prev: &[usize], mask: &[bool]) -> bool {
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut bwd: HashMap<usize, usize> = HashMap::new();
    for ((&a, &b), &fixed) in labels_t.iter().zip(labels_prev).zip(mask) {
        if !fixed {
            continue;
        }
        if *fwd.entry(a).or_insert(b) != b || *bwd.entry(b).or_insert(a) != a {
            return false;
        }
    }
    true
}

/// All set partitions of `m` units as restricted-growth strings in
/// lexicographic order.
pub fn enumerate_partitions(m: usize) -> Result<Vec<Partition>> {
    if m > MAX_ENUMERATION_UNITS {
        return Err(Error::ResourceLimit(format!(
            "enumerating partitions of {m} units exceeds the limit of {MAX_ENUMERATION_UNITS}"
        )));
    }
    if m == 0 {
        return Ok(vec![Partition::empty()]);
    }
    let mut out = Vec::new();
    let mut labels = vec![0usize; m];
    // maxes[i] = max label among labels[..i]
    let mut maxes = vec![0usize; m];
    loop {
        let k = maxes[m - 1].max(labels[m - 1]) + 1;
        out.push(Partition {
            labels: labels.clone(),
            n_clusters: k,
        });
        // find rightmost position that can be incremented
        let mut i = m - 1;
        loop {
            if i == 0 {
                return Ok(out);
            }
            if labels[i] <= maxes[i] {
                labels[i] += 1;
                break;
            }
            i -= 1;
        }
        for j in i + 1..m {
            labels[j] = 0;
            maxes[j] = maxes[j - 1].max(labels[j - 1]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(labels: &[i64]) -> Partition {
        Partition::canonicalize(labels).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(p(&[7, 7, 2]).one_based(), vec![1, 1, 2]);
        assert_eq!(p(&[1, 2, 3]).one_based(), vec![1, 2, 3]);
        assert_eq!(p(&[3, 1, 3, 1]).one_based(), vec![1, 2, 1, 2]);
        assert!(matches!(
            Partition::canonicalize::<i64>(&[]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn ari_examples() {
        let a = p(&[1, 1, 2, 2]);
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        let b = p(&[1, 2, 1, 2]);
        assert!((adjusted_rand_index(&a, &b).unwrap() + 0.5).abs() < 1e-12);
        let c = adjusted_rand_index(&p(&[1, 2, 3]), &p(&[1, 1, 1])).unwrap();
        assert!(c.abs() < 1e-12);
        assert!(adjusted_rand_index(&p(&[1, 2]), &p(&[1, 1, 1])).is_err());
    }

    #[test]
    fn ari_degenerate_denominator() {
        let s = Partition::singletons(4);
        let o = Partition::one_cluster(4);
        assert_eq!(adjusted_rand_index(&s, &s).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&o, &o).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&s, &o).unwrap(), 0.0);
        let one = Partition::one_cluster(1);
        assert_eq!(adjusted_rand_index(&one, &one).unwrap(), 1.0);
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(p(&[1, 1, 2]).restrict(&[0, 1]).unwrap().one_based(), vec![1, 1]);
        assert_eq!(
            p(&[1, 2, 1, 3]).restrict(&[1, 2, 3]).unwrap().one_based(),
            vec![1, 2, 3]
        );
        let e = p(&[1, 2, 2]).restrict(&[]).unwrap();
        assert!(e.is_empty());
        assert_eq!(e.n_clusters(), 0);
        assert!(p(&[1, 2]).restrict(&[2]).is_err());
    }

    #[test]
    fn compatibility_examples() {
        let prev = p(&[1, 1, 2]);
        let g = GammaVector::from_bits(&[1, 1, 0], 1).unwrap();
        assert!(is_compatible(&p(&[1, 1, 1]), &prev, &g).unwrap());
        assert!(!is_compatible(&p(&[1, 2, 1]), &prev, &g).unwrap());
        let free = GammaVector::zeros(3, 1);
        for q in enumerate_partitions(3).unwrap() {
            assert!(is_compatible(&q, &p(&[1, 2, 3]), &free).unwrap());
        }
    }

    #[test]
    fn compatibility_requires_bijection() {
        // units 0 and 1 merged at t but separated at t-1
        let g = GammaVector::from_bits(&[1, 1], 1).unwrap();
        assert!(!is_compatible(&p(&[1, 1]), &p(&[1, 2]), &g).unwrap());
        assert!(!is_compatible(&p(&[1, 2]), &p(&[1, 1]), &g).unwrap());
    }

    #[test]
    fn first_time_gamma_must_be_zero() {
        assert!(GammaVector::from_bits(&[0, 1], 0).is_err());
        assert_eq!(GammaVector::from_bits(&[0, 1, 1], 2).unwrap().n_free(), 1);
    }

    #[test]
    fn enumeration_counts_and_order() {
        let bell = [1usize, 1, 2, 5, 15, 52, 203, 877, 4140];
        for (m, &b) in bell.iter().enumerate() {
            let all = enumerate_partitions(m).unwrap();
            assert_eq!(all.len(), b, "m = {m}");
            let mut sorted = all.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), b);
        }
        let three: Vec<Vec<usize>> = enumerate_partitions(3)
            .unwrap()
            .iter()
            .map(|q| q.one_based())
            .collect();
        assert_eq!(
            three,
            vec![
                vec![1, 1, 1],
                vec![1, 1, 2],
                vec![1, 2, 1],
                vec![1, 2, 2],
                vec![1, 2, 3]
            ]
        );
        assert_eq!(enumerate_partitions(1).unwrap()[0].one_based(), vec![1]);
        assert!(matches!(
            enumerate_partitions(13),
            Err(Error::ResourceLimit(_))
        ));
    }

    fn comembership(q: &Partition) -> Vec<bool> {
        let m = q.n_units();
        let mut out = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                out.push(q.same_cluster(i, j));
            }
        }
        out
    }

    fn permute_labels(q: &Partition, shift: usize) -> Vec<usize> {
        q.labels().iter().map(|&l| (l * 7 + shift) % 101).collect()
    }

    proptest! {
        #[test]
        fn canonicalize_idempotent_and_preserving(raw in prop::collection::vec(0u8..6, 1..14)) {
            let c = Partition::canonicalize(&raw).unwrap();
            let again = Partition::canonicalize(c.labels()).unwrap();
            prop_assert_eq!(&c, &again);
            for i in 0..raw.len() {
                for j in 0..raw.len() {
                    prop_assert_eq!(raw[i] == raw[j], c.same_cluster(i, j));
                }
            }
            prop_assert_eq!(c.cluster_sizes().iter().sum::<usize>(), raw.len());
        }

        #[test]
        fn ari_self_and_label_invariance(a in prop::collection::vec(0u8..4, 2..12), shift in 0usize..50) {
            let pa = Partition::canonicalize(&a).unwrap();
            prop_assert!((adjusted_rand_index(&pa, &pa).unwrap() - 1.0).abs() < 1e-12);
            let b: Vec<u8> = a.iter().rev().copied().collect();
            let pb = Partition::canonicalize(&b).unwrap();
            let relabeled = Partition::canonicalize(&permute_labels(&pa, shift)).unwrap();
            let x = adjusted_rand_index(&pa, &pb).unwrap();
            let y = adjusted_rand_index(&relabeled, &pb).unwrap();
            let z = adjusted_rand_index(&pb, &pa).unwrap();
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((x - z).abs() < 1e-12);
            prop_assert!((-1.0..=1.0 + 1e-12).contains(&x));
        }

        #[test]
        fn restriction_composes(
            raw in prop::collection::vec(0u8..4, 1..12),
            mask_a in prop::collection::vec(any::<bool>(), 12),
            mask_b in prop::collection::vec(any::<bool>(), 12),
        ) {
            let q = Partition::canonicalize(&raw).unwrap();
            let m = raw.len();
            let a: Vec<usize> = (0..m).filter(|&i| mask_a[i]).collect();
            let inner = q.restrict(&a).unwrap();
            // B expressed as positions inside A
            let b_pos: Vec<usize> = (0..a.len()).filter(|&k| mask_b[a[k]]).collect();
            let ab: Vec<usize> = a.iter().copied().filter(|&i| mask_b[i]).collect();
            prop_assert_eq!(inner.restrict(&b_pos).unwrap(), q.restrict(&ab).unwrap());
            let all: Vec<usize> = (0..m).collect();
            prop_assert_eq!(q.restrict(&all).unwrap(), q.clone());
            prop_assert_eq!(comembership(&q).len(), m * m);
        }

        #[test]
        fn compatibility_symmetric_and_monotone(
            x in prop::collection::vec(0u8..3, 6),
            y in prop::collection::vec(0u8..3, 6),
            bits in prop::collection::vec(any::<bool>(), 6),
            flip in 0usize..6,
        ) {
            let px = Partition::canonicalize(&x).unwrap();
            let py = Partition::canonicalize(&y).unwrap();
            let g = GammaVector::new(bits.clone(), 1).unwrap();
            let fwd = is_compatible(&px, &py, &g).unwrap();
            prop_assert_eq!(fwd, is_compatible(&py, &px, &g).unwrap());
            let mut fewer = bits.clone();
            fewer[flip] = false;
            let g2 = GammaVector::new(fewer, 1).unwrap();
            if fwd {
                prop_assert!(is_compatible(&px, &py, &g2).unwrap());
            }
            let keep: Vec<usize> = (0..6).filter(|&i| bits[i]).collect();
            prop_assert_eq!(fwd, px.restrict(&keep).unwrap() == py.restrict(&keep).unwrap());
        }
    }
}
