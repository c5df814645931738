use std::collections::BTreeMap;

use serde::Serialize;

use super::OracleError;
use crate::models::{CountLawSpec, MultitypeGw, Outcome, TypeLaw};
use crate::numerics::CompensatedSum;

pub const MAX_TYPES: usize = 4;
pub const MAX_CHILDREN: usize = 3;
pub const MAX_DEPTH: usize = 5;
/// Largest number of labelled outcome trees `exact_expectation` will visit.
pub const MAX_OUTCOMES: f64 = 1e7;

/// Small multitype Galton-Watson model for exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TinyModel {
    /// `laws[x]`: outcomes `(probability, ordered child types)` of type `x`.
    laws: Vec<Vec<(f64, Vec<usize>)>>,
}

/// Result of an exhaustive enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exact {
    pub value: f64,
    /// Total probability of the enumerated trees.
    pub mass: f64,
    pub outcomes: u64,
}

impl TinyModel {
    pub fn new(laws: Vec<Vec<(f64, Vec<usize>)>>) -> Result<Self, OracleError> {
        let n = laws.len();
        if n == 0 || n > MAX_TYPES {
            return Err(OracleError::Input(format!("{n} types, need 1..={MAX_TYPES}")));
        }
        for (x, law) in laws.iter().enumerate() {
            let mut total = CompensatedSum::new();
            for (p, children) in law {
                if !(*p >= 0.0 && p.is_finite()) {
                    return Err(OracleError::Input(format!("type {x}: probability {p}")));
                }
                if children.len() > MAX_CHILDREN {
                    return Err(OracleError::Input(format!("type {x}: {} children", children.len())));
                }
                if let Some(c) = children.iter().find(|c| **c >= n) {
                    return Err(OracleError::Input(format!("type {x}: child type {c} out of range")));
                }
                total.add(*p);
            }
            if (total.value() - 1.0).abs() > 1e-12 {
                return Err(OracleError::Input(format!("type {x}: probabilities sum to {}", total.value())));
            }
        }
        Ok(Self { laws })
    }

    /// Single type with `probs[k]` the probability of `k` children.
    pub fn single_type(probs: &[f64]) -> Result<Self, OracleError> {
        Self::new(vec![probs.iter().enumerate().map(|(k, p)| (*p, vec![0; k])).collect()])
    }

    /// Converts a Galton-Watson model with finitely supported laws.
    pub fn from_gw(m: &MultitypeGw) -> Result<Self, OracleError> {
        let mut laws = Vec::with_capacity(m.n_types());
        for law in m.laws() {
            laws.push(match law {
                TypeLaw::Outcomes { outcomes } => {
                    outcomes.iter().map(|Outcome { prob, children }| (*prob, children.clone())).collect()
                }
                TypeLaw::Independent { laws } => independent_outcomes(laws)?,
                TypeLaw::Poisson { .. } => {
                    return Err(OracleError::Input("Poisson laws have unbounded support".into()))
                }
            });
        }
        Self::new(laws)
    }

    pub fn to_gw(&self) -> MultitypeGw {
        MultitypeGw::new(
            self.laws
                .iter()
                .map(|law| TypeLaw::Outcomes {
                    outcomes: law.iter().map(|(p, c)| Outcome { prob: *p, children: c.clone() }).collect(),
                })
                .collect(),
        )
        .expect("tiny models are valid Galton-Watson models")
    }

    pub fn n_types(&self) -> usize {
        self.laws.len()
    }

    pub fn laws(&self) -> &[Vec<(f64, Vec<usize>)>] {
        &self.laws
    }

    /// `M_ij`: mean number of type-`j` children of a type-`i` individual.
    pub fn mean_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.n_types();
        self.laws
            .iter()
            .map(|law| {
                let mut row = vec![0.0; n];
                for (p, children) in law {
                    for &c in children {
                        row[c] += p;
                    }
                }
                row
            })
            .collect()
    }

    /// `M^n f`, by repeated matrix-vector products.
    pub fn mean_power(&self, f: &[f64], n: usize) -> Vec<f64> {
        let m = self.mean_matrix();
        let mut v = f.to_vec();
        for _ in 0..n {
            v = m.iter().map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        }
        v
    }

    /// Number of labelled outcome trees of depth `n` from each root type:
    /// `N(x, 0) = 1`, `N(x, n) = sum_o prod_{c in o} N(c, n - 1)`, counting
    /// only outcomes of positive probability.
    pub fn enumeration_size(&self, n: usize) -> Vec<f64> {
        let mut count = vec![1.0; self.n_types()];
        for _ in 0..n {
            count = self
                .laws
                .iter()
                .map(|law| {
                    law.iter()
                        .filter(|(p, _)| *p > 0.0)
                        .map(|(_, children)| children.iter().map(|c| count[*c]).product::<f64>())
                        .sum()
                })
                .collect();
        }
        count
    }

    fn check_enumeration(&self, x0: usize, n: usize) -> Result<(), OracleError> {
        if x0 >= self.n_types() {
            return Err(OracleError::Input(format!("root type {x0} out of range")));
        }
        if n > MAX_DEPTH {
            return Err(OracleError::Input(format!("depth {n} above {MAX_DEPTH}")));
        }
        let size = self.enumeration_size(n)[x0];
        if size > MAX_OUTCOMES {
            return Err(OracleError::TooLarge { estimate: size, limit: MAX_OUTCOMES });
        }
        Ok(())
    }

    /// Visits every labelled outcome tree of depth `n` from one type-`x0`
    /// ancestor, calling `leaf(type counts of generation n, probability)`.
    fn enumerate(&self, x0: usize, n: usize, leaf: &mut dyn FnMut(&[u64], f64)) -> Result<u64, OracleError> {
        self.check_enumeration(x0, n)?;
        let mut visited = 0u64;
        let mut counts = vec![0u64; self.n_types()];
        let mut next = Vec::new();
        self.generation(&[x0], n, 1.0, &mut next, &mut counts, &mut visited, leaf);
        Ok(visited)
    }

    #[allow(clippy::too_many_arguments)]
    fn generation(
        &self,
        current: &[usize],
        depth_left: usize,
        prob: f64,
        scratch: &mut Vec<usize>,
        counts: &mut [u64],
        visited: &mut u64,
        leaf: &mut dyn FnMut(&[u64], f64),
    ) {
        if depth_left == 0 || current.is_empty() {
            counts.iter_mut().for_each(|c| *c = 0);
            if depth_left == 0 {
                for &x in current {
                    counts[x] += 1;
                }
            }
            *visited += 1;
            leaf(counts, prob);
            return;
        }
        let mut next = std::mem::take(scratch);
        next.clear();
        self.individual(current, 0, depth_left, prob, &mut next, counts, visited, leaf);
        *scratch = next;
    }

    #[allow(clippy::too_many_arguments)]
    fn individual(
        &self,
        current: &[usize],
        idx: usize,
        depth_left: usize,
        prob: f64,
        next: &mut Vec<usize>,
        counts: &mut [u64],
        visited: &mut u64,
        leaf: &mut dyn FnMut(&[u64], f64),
    ) {
        if idx == current.len() {
            let generation = next.clone();
            let mut scratch = Vec::new();
            self.generation(&generation, depth_left - 1, prob, &mut scratch, counts, visited, leaf);
            return;
        }
        for (p, children) in &self.laws[current[idx]] {
            if *p == 0.0 {
                continue;
            }
            let len = next.len();
            next.extend_from_slice(children);
            self.individual(current, idx + 1, depth_left, prob * p, next, counts, visited, leaf);
            next.truncate(len);
        }
    }

    /// `E_{delta_x0}[g(Z_n)]` over all labelled outcome trees, `g` a function
    /// of the generation-`n` type counts. Fails if the probabilities of the
    /// enumerated trees do not sum to one within `1e-12`.
    pub fn exact_expectation(&self, x0: usize, n: usize, g: impl Fn(&[u64]) -> f64) -> Result<Exact, OracleError> {
        let mut value = CompensatedSum::new();
        let mut mass = CompensatedSum::new();
        let outcomes = self.enumerate(x0, n, &mut |counts, p| {
            value.add(p * g(counts));
            mass.add(p);
        })?;
        let mass = mass.value();
        if (mass - 1.0).abs() > 1e-12 {
            return Err(OracleError::Mass(mass));
        }
        Ok(Exact { value: value.value(), mass, outcomes })
    }

    /// Law of the generation-`n` type counts by enumeration.
    pub fn exact_distribution(&self, x0: usize, n: usize) -> Result<BTreeMap<Vec<u64>, f64>, OracleError> {
        let mut dist: BTreeMap<Vec<u64>, CompensatedSum> = BTreeMap::new();
        self.enumerate(x0, n, &mut |counts, p| dist.entry(counts.to_vec()).or_default().add(p))?;
        Ok(dist.into_iter().map(|(k, v)| (k, v.value())).collect())
    }

    /// Law of the generation-`n` type counts by convolving offspring laws,
    /// generation by generation, without following labels.
    pub fn convolution_distribution(&self, x0: usize, n: usize) -> Result<BTreeMap<Vec<u64>, f64>, OracleError> {
        let k = self.n_types();
        if x0 >= k {
            return Err(OracleError::Input(format!("root type {x0} out of range")));
        }
        let one: Vec<BTreeMap<Vec<u64>, f64>> = self
            .laws
            .iter()
            .map(|law| {
                let mut d = BTreeMap::new();
                for (p, children) in law.iter().filter(|(p, _)| *p > 0.0) {
                    let mut c = vec![0u64; k];
                    for &x in children {
                        c[x] += 1;
                    }
                    *d.entry(c).or_insert(0.0) += p;
                }
                d
            })
            .collect();
        let mut start = vec![0u64; k];
        start[x0] = 1;
        let mut dist = BTreeMap::from([(start, 1.0)]);
        let mut powers: Vec<Vec<BTreeMap<Vec<u64>, f64>>> = vec![Vec::new(); k];
        for _ in 0..n {
            let mut next: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
            for (state, p) in &dist {
                let mut acc = BTreeMap::from([(vec![0u64; k], 1.0)]);
                for x in 0..k {
                    let m = state[x] as usize;
                    while powers[x].len() <= m {
                        let d = match powers[x].last() {
                            None => BTreeMap::from([(vec![0u64; k], 1.0)]),
                            Some(last) => convolve(last, &one[x]),
                        };
                        powers[x].push(d);
                    }
                    acc = convolve(&acc, &powers[x][m]);
                }
                for (c, q) in acc {
                    *next.entry(c).or_insert(0.0) += p * q;
                }
            }
            dist = next;
        }
        Ok(dist)
    }

    /// The shipped oracle models.
    pub fn catalogue() -> Vec<(&'static str, TinyModel)> {
        vec![
            ("binary", Self::single_type(&[0.0, 0.0, 1.0]).unwrap()),
            ("critical-binary", Self::single_type(&[0.5, 0.0, 0.5]).unwrap()),
            ("supercritical-binary", Self::single_type(&[0.4, 0.0, 0.6]).unwrap()),
            ("unary-binary", Self::single_type(&[0.1, 0.5, 0.4]).unwrap()),
            ("two-type", Self::two_type()),
            (
                "three-type",
                Self::new(vec![
                    vec![(0.3, vec![1]), (0.7, vec![0, 2])],
                    vec![(0.5, vec![]), (0.5, vec![1, 2])],
                    vec![(0.6, vec![0]), (0.4, vec![0, 1])],
                ])
                .unwrap(),
            ),
            (
                "four-type",
                Self::new(vec![
                    vec![(0.5, vec![1]), (0.5, vec![0, 3])],
                    vec![(0.4, vec![2]), (0.6, vec![2, 0])],
                    vec![(0.3, vec![]), (0.7, vec![3])],
                    vec![(0.8, vec![0]), (0.2, vec![0, 1])],
                ])
                .unwrap(),
            ),
        ]
    }

    /// Two types with mean matrix `[[0.8, 0.8], [1.0, 0.6]]`, so that
    /// `lambda = 1.6` and `lambda_2 = -0.2`.
    pub fn two_type() -> TinyModel {
        Self::new(vec![vec![(0.2, vec![]), (0.8, vec![0, 1])], vec![(0.4, vec![0]), (0.6, vec![0, 1])]]).unwrap()
    }
}

fn independent_outcomes(laws: &[CountLawSpec]) -> Result<Vec<(f64, Vec<usize>)>, OracleError> {
    let mut out = vec![(1.0, Vec::new())];
    for (t, spec) in laws.iter().enumerate() {
        let CountLawSpec::Probabilities { probs } = spec else {
            return Err(OracleError::Input("count law with unbounded support".into()));
        };
        let mut next = Vec::new();
        for (p, children) in &out {
            for (k, q) in probs.iter().enumerate() {
                if *q == 0.0 {
                    continue;
                }
                let mut c: Vec<usize> = children.clone();
                c.extend(std::iter::repeat_n(t, k));
                next.push((p * q, c));
            }
        }
        out = next;
    }
    Ok(out)
}

fn convolve(a: &BTreeMap<Vec<u64>, f64>, b: &BTreeMap<Vec<u64>, f64>) -> BTreeMap<Vec<u64>, f64> {
    let mut out = BTreeMap::new();
    for (ka, pa) in a {
        for (kb, pb) in b {
            let k: Vec<u64> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            *out.entry(k).or_insert(0.0) += pa * pb;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::log_star;

    fn size(c: &[u64]) -> f64 {
        c.iter().sum::<u64>() as f64
    }

    #[test]
    fn binary_tree_has_eight_leaves() {
        let m = TinyModel::single_type(&[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(m.exact_expectation(0, 3, size).unwrap().value, 8.0);
    }

    #[test]
    fn critical_binary_mean_is_one() {
        let m = TinyModel::single_type(&[0.5, 0.0, 0.5]).unwrap();
        assert!((m.exact_expectation(0, 1, size).unwrap().value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zlogz_matches_convolution() {
        let m = TinyModel::single_type(&[0.4, 0.0, 0.6]).unwrap();
        let g = |c: &[u64]| {
            let k = size(c);
            k * log_star(k)
        };
        let e = m.exact_expectation(0, 2, g).unwrap();
        let dist = m.convolution_distribution(0, 2).unwrap();
        let sizes: Vec<u64> = dist.keys().map(|k| k[0]).collect();
        assert_eq!(sizes, vec![0, 2, 4]);
        // P(4) = 0.6^3, P(2) = 2 * 0.6^2 * 0.4, P(0) = rest.
        assert!((dist[&vec![4]] - 0.216).abs() < 1e-15);
        assert!((dist[&vec![2]] - 0.288).abs() < 1e-15);
        let by_conv: f64 = dist.iter().map(|(k, p)| p * g(k)).sum();
        assert!((e.value - by_conv).abs() < 1e-14);
        assert!((e.value - (0.288 * 2.0 * 2.0 / std::f64::consts::E + 0.216 * 4.0 * 4f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn distributions_agree_on_catalogue() {
        for (name, m) in TinyModel::catalogue() {
            for x0 in 0..m.n_types() {
                let n = if m.enumeration_size(3)[x0] < 1e6 { 3 } else { 2 };
                let a = m.exact_distribution(x0, n).unwrap();
                let b = m.convolution_distribution(x0, n).unwrap();
                assert_eq!(a.len(), b.len(), "{name}");
                for (k, p) in &a {
                    assert!((p - b[k]).abs() < 1e-14, "{name} {k:?}");
                }
            }
        }
    }

    #[test]
    fn oversized_enumeration_is_refused() {
        let m = TinyModel::single_type(&[0.1, 0.0, 0.0, 0.9]).unwrap();
        match m.exact_expectation(0, 5, size) {
            Err(OracleError::TooLarge { estimate, .. }) => assert!(estimate > 1e7),
            other => panic!("{other:?}"),
        }
        assert!(m.exact_expectation(0, 6, size).is_err());
    }

    #[test]
    fn round_trip_through_gw() {
        let m = TinyModel::two_type();
        let back = TinyModel::from_gw(&m.to_gw()).unwrap();
        assert_eq!(back, m);
        let gw = MultitypeGw::single_type(vec![0.4, 0.0, 0.6]).unwrap();
        let t = TinyModel::from_gw(&gw).unwrap();
        assert_eq!(t.mean_matrix(), vec![vec![1.2]]);
    }
}
