use std::collections::HashSet;

use serde::Serialize;

use super::{GenealogyError, UlamLabel};
use crate::numerics::CompensatedSum;

/// Generation number (discrete time) or physical time (continuous time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TimeIndex {
    Generation(usize),
    Time(f64),
}

/// One individual: its label and its trait.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom<T> {
    pub label: UlamLabel,
    pub value: T,
}

/// Finite labelled point measure `sum_u delta_{Z(u)}`.
///
/// Atom order is insertion order; every exported aggregate is a compensated
/// sum so results do not depend on that order beyond rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMeasure<T> {
    atoms: Vec<Atom<T>>,
    time: TimeIndex,
}

impl<T> PointMeasure<T> {
    /// Checked constructor: labels must be pairwise distinct.
    pub fn new(atoms: Vec<Atom<T>>, time: TimeIndex) -> Result<Self, GenealogyError> {
        let mut seen = HashSet::with_capacity(atoms.len());
        for a in &atoms {
            if !seen.insert(&a.label) {
                return Err(GenealogyError::DuplicateLabel(a.label.to_string()));
            }
        }
        Ok(Self { atoms, time })
    }

    /// Constructor for measures whose labels are distinct by construction.
    pub(crate) fn from_distinct(atoms: Vec<Atom<T>>, time: TimeIndex) -> Self {
        Self { atoms, time }
    }

    pub fn empty(time: TimeIndex) -> Self {
        Self { atoms: Vec::new(), time }
    }

    /// Dirac mass at `x` carried by the founder label.
    pub fn dirac(x: T) -> Self {
        Self { atoms: vec![Atom { label: UlamLabel::root(), value: x }], time: TimeIndex::Generation(0) }
    }

    pub fn atoms(&self) -> &[Atom<T>] {
        &self.atoms
    }

    pub fn into_atoms(self) -> Vec<Atom<T>> {
        self.atoms
    }

    pub fn time(&self) -> TimeIndex {
        self.time
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `Z(f) = sum over atoms of f(trait)`; errors on the first non-finite value.
    pub fn functional<F: Fn(&T) -> f64>(&self, f: F) -> Result<f64, GenealogyError> {
        let mut acc = CompensatedSum::new();
        for a in &self.atoms {
            let v = f(&a.value);
            if !v.is_finite() {
                return Err(GenealogyError::NonFinite { label: a.label.to_string(), value: v });
            }
            acc.add(v);
        }
        Ok(acc.value())
    }

    /// Like [`functional`](Self::functional) for functions known to be finite.
    pub fn sum<F: Fn(&T) -> f64>(&self, f: F) -> f64 {
        let mut acc = CompensatedSum::new();
        for a in &self.atoms {
            acc.add(f(&a.value));
        }
        acc.value()
    }

    /// Check that every label has the depth expected for generation `n`
    /// (founder at depth `base`).
    pub fn check_generation(&self, n: usize, base: usize) -> Result<(), GenealogyError> {
        for a in &self.atoms {
            if a.label.depth() != n + base {
                return Err(GenealogyError::GenerationMismatch {
                    label: a.label.to_string(),
                    depth: a.label.depth(),
                    expected: n + base,
                });
            }
        }
        Ok(())
    }
}

impl<T: Clone> PointMeasure<T> {
    /// Restriction to the descendants of `u`, relabelled relative to `u`.
    pub fn subtree(&self, u: &UlamLabel) -> PointMeasure<T> {
        let atoms: Vec<Atom<T>> = self
            .atoms
            .iter()
            .filter_map(|a| {
                u.relative(&a.label).map(|label| Atom { label, value: a.value.clone() })
            })
            .collect();
        let time = match self.time {
            TimeIndex::Generation(g) => TimeIndex::Generation(g.saturating_sub(u.depth())),
            t => t,
        };
        PointMeasure { atoms, time }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lab(p: &[u64]) -> UlamLabel {
        UlamLabel::from_path(p.iter().copied()).unwrap()
    }

    fn gen2() -> PointMeasure<f64> {
        PointMeasure::new(
            vec![
                Atom { label: lab(&[1, 1]), value: 0.1 },
                Atom { label: lab(&[1, 2]), value: 0.2 },
                Atom { label: lab(&[2, 1]), value: 0.4 },
            ],
            TimeIndex::Generation(2),
        )
        .unwrap()
    }

    #[test]
    fn functional_basics() {
        let empty: PointMeasure<f64> = PointMeasure::empty(TimeIndex::Generation(0));
        assert_eq!(empty.functional(|x| x * 10.0).unwrap(), 0.0);
        let m = PointMeasure::new(
            vec![Atom { label: lab(&[1]), value: 0.2 }, Atom { label: lab(&[2]), value: 0.5 }],
            TimeIndex::Generation(1),
        )
        .unwrap();
        assert!((m.functional(|x| *x).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(PointMeasure::dirac(3.0).functional(|_| 1.0).unwrap(), 1.0);
    }

    #[test]
    fn functional_names_bad_atom() {
        let m = gen2();
        let err = m.functional(|x| if *x > 0.3 { f64::INFINITY } else { 1.0 }).unwrap_err();
        assert!(matches!(err, GenealogyError::NonFinite { ref label, .. } if label == "2.1"));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let r = PointMeasure::new(
            vec![Atom { label: lab(&[1]), value: 0 }, Atom { label: lab(&[1]), value: 1 }],
            TimeIndex::Generation(1),
        );
        assert!(matches!(r, Err(GenealogyError::DuplicateLabel(_))));
    }

    #[test]
    fn subtree_filters_and_relabels() {
        let m = gen2();
        let s = m.subtree(&lab(&[1]));
        let labels: Vec<_> = s.atoms().iter().map(|a| a.label.clone()).collect();
        assert_eq!(labels, vec![lab(&[1]), lab(&[2])]);
        assert_eq!(s.time(), TimeIndex::Generation(1));
        assert_eq!(m.subtree(&UlamLabel::root()), m);
        assert!(m.subtree(&lab(&[3])).is_empty());
    }

    proptest! {
        #[test]
        fn functional_is_linear(values in proptest::collection::vec(-10.0f64..10.0, 0..40),
                                a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let atoms = values.iter().enumerate()
                .map(|(i, v)| Atom { label: lab(&[i as u64 + 1]), value: *v })
                .collect();
            let m = PointMeasure::new(atoms, TimeIndex::Generation(1)).unwrap();
            let f = |x: &f64| x.sin();
            let g = |x: &f64| x * x;
            let lhs = m.functional(|x| a * f(x) + b * g(x)).unwrap();
            let rhs = a * m.functional(f).unwrap() + b * m.functional(g).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }

        #[test]
        fn subtrees_partition_generation(splits in proptest::collection::vec(0usize..4, 1..8)) {
            // generation 1 has splits.len() atoms; atom i has splits[i] children.
            let mut atoms = Vec::new();
            for (i, &k) in splits.iter().enumerate() {
                for j in 0..k {
                    atoms.push(Atom { label: lab(&[i as u64 + 1, j as u64 + 1]),
                                      value: (i * 10 + j) as f64 });
                }
            }
            let m = PointMeasure::new(atoms, TimeIndex::Generation(2)).unwrap();
            let total = m.functional(|x| x.sqrt()).unwrap();
            let parts: f64 = (0..splits.len())
                .map(|i| m.subtree(&lab(&[i as u64 + 1])).functional(|x| x.sqrt()).unwrap())
                .sum();
            prop_assert!((total - parts).abs() <= 1e-12 * (1.0 + total));
        }
    }
}
