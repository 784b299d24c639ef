//! Random hypergraph ensembles and interpolation paths.
//!
//! Edges are unordered `k`-subsets of `[0, n)` with multiplicities; the
//! Poisson ensemble draws `Poisson(alpha * n)` edge slots i.i.d. uniform over
//! all `C(n,k)` subsets, the Erdos-Renyi variant keeps each subset with
//! probability `alpha n / C(n,k)`, and the inhomogeneous ensemble attaches a
//! per-subset Poisson rate through a small set of edge classes.

use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// `C(n, k)` as u128; saturates on overflow (far beyond desk scale).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// A multi-edge hypergraph: sorted `k`-subsets with positive multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    pub n: usize,
    pub k: usize,
    /// `(subset, multiplicity)` pairs; subsets strictly sorted and unique.
    pub edges: Vec<(Vec<usize>, u32)>,
}

impl Hypergraph {
    pub fn empty(n: usize, k: usize) -> Self {
        Hypergraph { n, k, edges: Vec::new() }
    }

    /// Builds from raw slots, aggregating repeats into multiplicities.
    pub fn from_slots(n: usize, k: usize, slots: Vec<Vec<usize>>) -> Result<Self> {
        let mut counts: BTreeMap<Vec<usize>, u32> = BTreeMap::new();
        for mut subset in slots {
            subset.sort_unstable();
            if subset.len() != k
                || subset.windows(2).any(|w| w[0] == w[1])
                || subset.iter().any(|&v| v >= n)
            {
                return Err(Error::InvalidParameter(format!(
                    "invalid edge subset {subset:?} for n={n}, k={k}"
                )));
            }
            *counts.entry(subset).or_insert(0) += 1;
        }
        Ok(Hypergraph { n, k, edges: counts.into_iter().collect() })
    }

    /// Total edge-copy count `M` (sum of multiplicities).
    pub fn total_copies(&self) -> usize {
        self.edges.iter().map(|&(_, m)| m as usize).sum()
    }

    /// Returns a copy with one extra edge copy on `subset`.
    pub fn with_extra_copy(&self, subset: &[usize]) -> Result<Self> {
        let mut slots: Vec<Vec<usize>> = Vec::with_capacity(self.total_copies() + 1);
        for (s, m) in &self.edges {
            for _ in 0..*m {
                slots.push(s.clone());
            }
        }
        slots.push(subset.to_vec());
        Hypergraph::from_slots(self.n, self.k, slots)
    }
}

/// Parameters of the homogeneous ensembles.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n: usize,
    pub k: usize,
    /// Edge density: the expected number of edge copies is `alpha * n`.
    pub alpha: f64,
}

impl EnsembleParams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n < self.k {
            return Err(Error::InvalidParameter(format!(
                "need n >= k >= 1, got n={}, k={}",
                self.n, self.k
            )));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::InvalidParameter("alpha must be nonnegative".into()));
        }
        Ok(())
    }

    /// Per-subset Poisson intensity `alpha n / C(n,k)`.
    pub fn per_edge_rate(&self) -> f64 {
        self.alpha * self.n as f64 / binomial(self.n, self.k) as f64
    }
}

/// Draws `Poisson(mean)` by inversion. Deterministic given the stream;
/// intended for the small means of desk-scale ensembles.
pub fn poisson(mean: f64, rng: &mut impl Rng) -> u64 {
    assert!(mean >= 0.0 && mean < 700.0, "poisson inversion needs 0 <= mean < 700");
    if mean == 0.0 {
        return 0;
    }
    let target: f64 = rng.random();
    let mut p = (-mean).exp();
    let mut cdf = p;
    let mut count = 0u64;
    while cdf < target && count < 100_000 {
        count += 1;
        p *= mean / count as f64;
        cdf += p;
    }
    count
}

/// Draws a uniform sorted `k`-subset of `[0, n)`.
pub fn random_subset(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    sample_subset(n, k, rng)
}

fn sample_subset(n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    // partial Fisher-Yates over [0, n)
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut subset = pool[..k].to_vec();
    subset.sort_unstable();
    subset
}

/// Samples from the Poisson multi-edge ensemble `P_k(alpha, n)`.
pub fn sample_poisson(params: &EnsembleParams, rng: &mut impl Rng) -> Result<Hypergraph> {
    params.validate()?;
    let m = poisson(params.alpha * params.n as f64, rng);
    let slots = (0..m).map(|_| sample_subset(params.n, params.k, rng)).collect();
    Hypergraph::from_slots(params.n, params.k, slots)
}

fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        f(&subset);
        // next combination in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if subset[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        subset[i] += 1;
        for j in i + 1..k {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Samples a simple hypergraph with each subset present independently with
/// probability `alpha n / C(n,k)`.
pub fn sample_er(params: &EnsembleParams, rng: &mut impl Rng) -> Result<Hypergraph> {
    params.validate()?;
    let p = params.per_edge_rate();
    if p > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "ER edge probability {p} > 1 (alpha too large for n={}, k={})",
            params.n, params.k
        )));
    }
    let total = binomial(params.n, params.k);
    if total > 1 << 24 {
        return Err(Error::BudgetExceeded { needed: total, budget: 1 << 24 });
    }
    let mut slots = Vec::new();
    for_each_subset(params.n, params.k, |s| {
        if rng.random::<f64>() < p {
            slots.push(s.to_vec());
        }
    });
    Hypergraph::from_slots(params.n, params.k, slots)
}

/// One class of `k`-subsets inside an intensity map. `n1` fixes the split
/// `V1 = [0, n1)`, `V2 = [n1, n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "class")]
pub enum EdgeClass {
    All,
    WithinV1 { n1: usize },
    WithinV2 { n1: usize },
    Crossing { n1: usize },
    /// Explicit sparse list of subsets (each sorted).
    Explicit { subsets: Vec<Vec<usize>> },
}

impl EdgeClass {
    fn size(&self, n: usize, k: usize) -> u128 {
        match self {
            EdgeClass::All => binomial(n, k),
            EdgeClass::WithinV1 { n1 } => binomial(*n1, k),
            EdgeClass::WithinV2 { n1 } => binomial(n - n1, k),
            EdgeClass::Crossing { n1 } => {
                binomial(n, k) - binomial(*n1, k) - binomial(n - n1, k)
            }
            EdgeClass::Explicit { subsets } => subsets.len() as u128,
        }
    }

    fn contains(&self, subset: &[usize], _n: usize) -> bool {
        match self {
            EdgeClass::All => true,
            EdgeClass::WithinV1 { n1 } => subset.iter().all(|&v| v < *n1),
            EdgeClass::WithinV2 { n1 } => subset.iter().all(|&v| v >= *n1),
            EdgeClass::Crossing { n1 } => {
                subset.iter().any(|&v| v < *n1) && subset.iter().any(|&v| v >= *n1)
            }
            EdgeClass::Explicit { subsets } => subsets.iter().any(|s| s == subset),
        }
    }

    fn sample(&self, n: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
        match self {
            EdgeClass::All => sample_subset(n, k, rng),
            EdgeClass::WithinV1 { n1 } => sample_subset(*n1, k, rng),
            EdgeClass::WithinV2 { n1 } => {
                let mut s = sample_subset(n - n1, k, rng);
                for v in &mut s {
                    *v += n1;
                }
                s
            }
            EdgeClass::Crossing { n1 } => loop {
                let s = sample_subset(n, k, rng);
                if s.iter().any(|&v| v < *n1) && s.iter().any(|&v| v >= *n1) {
                    return s;
                }
            },
            EdgeClass::Explicit { subsets } => {
                subsets[rng.random_range(0..subsets.len())].clone()
            }
        }
    }
}

/// A per-subset Poisson rate map `epsilon: E_k(V) -> R>=0` given by classes.
/// Subsets not covered by any class carry rate 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntensityMap {
    pub n: usize,
    pub k: usize,
    /// `(class, per-subset rate)` pairs; classes must be pairwise disjoint.
    pub classes: Vec<(EdgeClass, f64)>,
}

impl IntensityMap {
    /// Homogeneous map with every subset at `alpha n / C(n,k)`.
    pub fn constant(params: &EnsembleParams) -> Result<Self> {
        params.validate()?;
        Ok(IntensityMap {
            n: params.n,
            k: params.k,
            classes: vec![(EdgeClass::All, params.per_edge_rate())],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.n < self.k {
            return Err(Error::InvalidParameter("need n >= k >= 1".into()));
        }
        for (class, rate) in &self.classes {
            if !(rate.is_finite() && *rate >= 0.0) {
                return Err(Error::InvalidParameter("class rate must be nonnegative".into()));
            }
            if let EdgeClass::Explicit { subsets } = class {
                for s in subsets {
                    if s.len() != self.k
                        || !s.windows(2).all(|w| w[0] < w[1])
                        || s.iter().any(|&v| v >= self.n)
                    {
                        return Err(Error::InvalidParameter(format!(
                            "invalid explicit subset {s:?}"
                        )));
                    }
                }
            }
        }
        // disjointness: sizes of positive-rate classes may not exceed C(n,k),
        // and class membership predicates may not overlap on a witness scan
        // when the subset space is small enough to enumerate
        if binomial(self.n, self.k) <= 1 << 16 {
            let mut bad = false;
            for_each_subset(self.n, self.k, |s| {
                let hits = self.classes.iter().filter(|(c, _)| c.contains(s, self.n)).count();
                if hits > 1 {
                    bad = true;
                }
            });
            if bad {
                return Err(Error::InvalidParameter("intensity classes overlap".into()));
            }
        }
        Ok(())
    }

    /// Rate attached to one subset.
    pub fn rate(&self, subset: &[usize]) -> f64 {
        self.classes
            .iter()
            .find(|(c, _)| c.contains(subset, self.n))
            .map(|&(_, r)| r)
            .unwrap_or(0.0)
    }

    /// Total mass `sum_I epsilon_I`.
    pub fn total_mass(&self) -> f64 {
        self.classes
            .iter()
            .map(|(c, r)| r * c.size(self.n, self.k) as f64)
            .sum()
    }
}

/// Samples the inhomogeneous Poisson ensemble `P_k(epsilon, n)`: total count
/// `Poisson(sum_I epsilon_I)`, slots assigned to classes proportionally to
/// class mass and uniformly within each class.
pub fn sample_inhomogeneous(map: &IntensityMap, rng: &mut impl Rng) -> Result<Hypergraph> {
    map.validate()?;
    let masses: Vec<f64> = map
        .classes
        .iter()
        .map(|(c, r)| r * c.size(map.n, map.k) as f64)
        .collect();
    let total: f64 = masses.iter().sum();
    let m = poisson(total, rng);
    let mut slots = Vec::with_capacity(m as usize);
    for _ in 0..m {
        let mut pick: f64 = rng.random::<f64>() * total;
        let mut idx = 0;
        for (i, &mass) in masses.iter().enumerate() {
            idx = i;
            if pick < mass {
                break;
            }
            pick -= mass;
        }
        slots.push(map.classes[idx].0.sample(map.n, map.k, rng));
    }
    Hypergraph::from_slots(map.n, map.k, slots)
}

/// Subset counts for a bisection: `(m, m1, m2, crossing)`.
pub fn edge_classes(n: usize, k: usize, n1: usize) -> Result<(u128, u128, u128, u128)> {
    let n2 = n.checked_sub(n1).ok_or_else(|| {
        Error::InvalidParameter(format!("partition size n1={n1} exceeds n={n}"))
    })?;
    if n1 < k || n2 < k {
        return Err(Error::InvalidParameter(format!(
            "both parts must have at least k vertices: n1={n1}, n2={n2}, k={k}"
        )));
    }
    let m = binomial(n, k);
    let m1 = binomial(n1, k);
    let m2 = binomial(n2, k);
    Ok((m, m1, m2, m - m1 - m2))
}

/// The interpolation path between the full ensemble at `t = 0` and two
/// independent sub-ensembles at `t = 1`; total mass is `alpha n` at every `t`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CanonicalPath {
    pub n1: usize,
    pub n2: usize,
    pub k: usize,
    pub alpha: f64,
}

impl CanonicalPath {
    pub fn new(n1: usize, n2: usize, k: usize, alpha: f64) -> Result<Self> {
        edge_classes(n1 + n2, k, n1)?;
        if !(alpha >= 0.0) {
            return Err(Error::InvalidParameter("alpha must be nonnegative".into()));
        }
        Ok(CanonicalPath { n1, n2, k, alpha })
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2
    }

    /// Intensity map at path position `t` in `[0, 1]`:
    /// `epsilon(t) = (1-t) epsilon(0) + t epsilon(1)`.
    pub fn intensity(&self, t: f64) -> Result<IntensityMap> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("path position t={t} outside [0,1]")));
        }
        let n = self.n();
        let (m, m1, m2, _) = edge_classes(n, self.k, self.n1)?;
        let base = self.alpha * n as f64 / m as f64;
        let r1 = (1.0 - t) * base + t * self.alpha * self.n1 as f64 / m1 as f64;
        let r2 = (1.0 - t) * base + t * self.alpha * self.n2 as f64 / m2 as f64;
        let rx = (1.0 - t) * base;
        Ok(IntensityMap {
            n,
            k: self.k,
            classes: vec![
                (EdgeClass::WithinV1 { n1: self.n1 }, r1),
                (EdgeClass::WithinV2 { n1: self.n1 }, r2),
                (EdgeClass::Crossing { n1: self.n1 }, rx),
            ],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn alpha_zero_is_empty() {
        let params = EnsembleParams { n: 6, k: 2, alpha: 0.0 };
        let mut r = rng::stream(1, 0);
        assert_eq!(sample_poisson(&params, &mut r).unwrap().total_copies(), 0);
        assert_eq!(sample_er(&params, &mut r).unwrap().total_copies(), 0);
    }

    #[test]
    fn poisson_mean_matches() {
        // n=4, k=2, alpha=1.5 -> E[M] = 6, Var[M] = 6
        let params = EnsembleParams { n: 4, k: 2, alpha: 1.5 };
        let trials = 100_000;
        let mut sum = 0u64;
        for i in 0..trials {
            let mut r = rng::stream(42, i);
            sum += sample_poisson(&params, &mut r).unwrap().total_copies() as u64;
        }
        let mean = sum as f64 / trials as f64;
        let sigma = (6.0f64 / trials as f64).sqrt();
        assert!((mean - 6.0).abs() < 3.0 * sigma, "mean {mean} not within 3 sigma of 6");
    }

    #[test]
    fn poisson_slots_uniform_chi_square() {
        let params = EnsembleParams { n: 4, k: 2, alpha: 1.5 };
        let mut counts = std::collections::BTreeMap::new();
        let mut slots = 0usize;
        let mut i = 0u64;
        while slots < 100_000 {
            let mut r = rng::stream(7, i);
            let g = sample_poisson(&params, &mut r).unwrap();
            for (s, m) in &g.edges {
                *counts.entry(s.clone()).or_insert(0usize) += *m as usize;
                slots += *m as usize;
            }
            i += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = slots as f64 / 6.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square with 5 dof, 1% critical value
        assert!(chi2 < 15.086, "chi2 = {chi2}");
    }

    #[test]
    fn er_expected_edge_count() {
        let params = EnsembleParams { n: 4, k: 2, alpha: 1.0 };
        let trials = 20_000;
        let mut sum = 0usize;
        for i in 0..trials {
            let mut r = rng::stream(11, i);
            let g = sample_er(&params, &mut r).unwrap();
            assert!(g.edges.iter().all(|&(_, m)| m == 1));
            sum += g.total_copies();
        }
        let mean = sum as f64 / trials as f64;
        // Binomial(6, 2/3): mean 4, var 4/3
        let sigma = (4.0 / 3.0 / trials as f64).sqrt();
        assert!((mean - 4.0).abs() < 4.0 * sigma, "mean {mean}");
    }

    #[test]
    fn er_p_above_one_rejected() {
        let params = EnsembleParams { n: 4, k: 2, alpha: 2.0 };
        assert!(sample_er(&params, &mut rng::stream(0, 0)).is_err());
    }

    #[test]
    fn er_boundary_single_edge() {
        let params = EnsembleParams { n: 3, k: 3, alpha: 1.0 / 3.0 };
        // p = alpha n / C(3,3) = 1
        let g = sample_er(&params, &mut rng::stream(0, 0)).unwrap();
        assert_eq!(g.edges, vec![(vec![0, 1, 2], 1)]);
    }

    #[test]
    fn per_subset_multiplicity_variance_matches_mean() {
        // aggregated multiplicities are independent Poisson(p) per subset
        let params = EnsembleParams { n: 4, k: 2, alpha: 1.5 };
        let p = params.per_edge_rate();
        let trials = 50_000u64;
        let probe = vec![0usize, 2usize];
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for i in 0..trials {
            let mut r = rng::stream(99, i);
            let g = sample_poisson(&params, &mut r).unwrap();
            let m = g
                .edges
                .iter()
                .find(|(s, _)| *s == probe)
                .map(|&(_, m)| m as f64)
                .unwrap_or(0.0);
            s1 += m;
            s2 += m * m;
        }
        let mean = s1 / trials as f64;
        let var = s2 / trials as f64 - mean * mean;
        assert!((mean - p).abs() < 0.05, "mean {mean} vs p {p}");
        assert!((var - p).abs() < 0.1, "var {var} vs p {p}");
    }

    #[test]
    fn edge_class_counts() {
        assert_eq!(edge_classes(4, 2, 2).unwrap(), (6, 1, 1, 4));
        assert_eq!(edge_classes(6, 3, 3).unwrap(), (20, 1, 1, 18));
        assert!(edge_classes(5, 3, 3).is_err()); // n2 = 2 < k
    }

    #[test]
    fn canonical_path_endpoints_and_balance() {
        let path = CanonicalPath::new(2, 2, 2, 1.0).unwrap();
        let at0 = path.intensity(0.0).unwrap();
        for (_, r) in &at0.classes {
            assert!((r - 4.0 / 6.0).abs() < 1e-12);
        }
        let at1 = path.intensity(1.0).unwrap();
        assert!((at1.rate(&[0, 1]) - 2.0).abs() < 1e-12);
        assert!((at1.rate(&[2, 3]) - 2.0).abs() < 1e-12);
        assert!(at1.rate(&[0, 2]).abs() < 1e-12);
        let mid = path.intensity(0.5).unwrap();
        assert!((mid.rate(&[0, 2]) - 1.0 / 3.0).abs() < 1e-12);
        // balanced: total mass alpha n at every t
        for t in [0.0, 0.1, 0.25, 0.5, 0.9, 1.0] {
            let mass = path.intensity(t).unwrap().total_mass();
            assert!((mass - 4.0).abs() < 1e-12, "mass {mass} at t={t}");
        }
        assert!(path.intensity(1.5).is_err());
    }

    #[test]
    fn constant_map_matches_homogeneous_law() {
        // mean edge-copy count of the inhomogeneous sampler under a constant
        // map equals alpha n
        let params = EnsembleParams { n: 5, k: 2, alpha: 0.8 };
        let map = IntensityMap::constant(&params).unwrap();
        assert!((map.total_mass() - 4.0).abs() < 1e-9);
        let trials = 50_000u64;
        let mut sum = 0usize;
        for i in 0..trials {
            let mut r = rng::stream(5, i);
            sum += sample_inhomogeneous(&map, &mut r).unwrap().total_copies();
        }
        let mean = sum as f64 / trials as f64;
        let sigma = (4.0f64 / trials as f64).sqrt();
        assert!((mean - 4.0).abs() < 4.0 * sigma, "mean {mean}");
    }

    #[test]
    fn zero_map_is_empty() {
        let map = IntensityMap { n: 5, k: 2, classes: vec![(EdgeClass::All, 0.0)] };
        let g = sample_inhomogeneous(&map, &mut rng::stream(3, 0)).unwrap();
        assert_eq!(g.total_copies(), 0);
    }

    #[test]
    fn canonical_t1_has_no_crossing_edges() {
        let path = CanonicalPath::new(3, 3, 2, 0.5).unwrap();
        let map = path.intensity(1.0).unwrap();
        for i in 0..200u64 {
            let mut r = rng::stream(17, i);
            let g = sample_inhomogeneous(&map, &mut r).unwrap();
            for (s, _) in &g.edges {
                let in_v1 = s.iter().all(|&v| v < 3);
                let in_v2 = s.iter().all(|&v| v >= 3);
                assert!(in_v1 || in_v2, "crossing edge {s:?} at t=1");
            }
        }
    }

    #[test]
    fn hypergraph_json_round_trip() {
        let params = EnsembleParams { n: 6, k: 3, alpha: 1.0 };
        let g = sample_poisson(&params, &mut rng::stream(2, 9)).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        let back: Hypergraph = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
    }
}
