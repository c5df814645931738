use rayon::prelude::*;
use serde::Serialize;

use super::{ModelError, MultitypeGw, SimulationCaps};
use crate::genealogy::{Atom, LabelKey, LabelStream, PointMeasure, TimeIndex, UlamLabel};

const PAR_THRESHOLD: usize = 4096;

/// Generations `0..=n` of a Galton-Watson tree, possibly censored.
#[derive(Debug, Clone)]
pub struct DiscreteTrajectory {
    /// Labelled generation measures; empty when measures were not recorded.
    pub generations: Vec<PointMeasure<usize>>,
    /// Type counts per generation.
    pub type_counts: Vec<Vec<u64>>,
    pub censored: bool,
    /// First generation that broke a cap.
    pub censored_at: Option<usize>,
}

impl DiscreteTrajectory {
    pub fn sizes(&self) -> Vec<u64> {
        self.type_counts.iter().map(|c| c.iter().sum()).collect()
    }

    /// Last recorded generation.
    pub fn last_generation(&self) -> usize {
        self.type_counts.len() - 1
    }

    /// `Z_n(f)` computed from type counts.
    pub fn functional(&self, n: usize, f: &[f64]) -> f64 {
        crate::numerics::csum(self.type_counts[n].iter().zip(f).map(|(&c, v)| c as f64 * v))
    }

    pub fn has_labels(&self) -> bool {
        !self.generations.is_empty()
    }
}

/// Per-generation summary row used for CSV export.
#[derive(Debug, Clone, Serialize)]
pub struct GenerationRow {
    pub generation: usize,
    pub population: u64,
    pub censored: bool,
}

struct Individual {
    label: UlamLabel,
    key: LabelKey,
    value: usize,
}

/// Runs the process from `init` for `n` generations.
///
/// Individual `u` draws its offspring from the stream keyed by `(seed, u)`, so
/// the result does not depend on processing order or on the thread pool.
pub fn simulate_discrete(
    model: &MultitypeGw,
    init: &PointMeasure<usize>,
    n: usize,
    caps: &SimulationCaps,
    seed: u64,
) -> Result<DiscreteTrajectory, ModelError> {
    caps.validate()?;
    let n_types = model.n_types();
    let mut current: Vec<Individual> = Vec::with_capacity(init.len());
    for a in init.atoms() {
        if a.value >= n_types {
            return Err(ModelError::Domain(format!("type {} at {}", a.value, a.label)));
        }
        current.push(Individual { key: LabelKey::for_label(seed, &a.label), label: a.label.clone(), value: a.value });
    }
    let mut traj = DiscreteTrajectory {
        generations: Vec::new(),
        type_counts: Vec::new(),
        censored: false,
        censored_at: None,
    };
    let record = |traj: &mut DiscreteTrajectory, gen: usize, pop: &[Individual]| {
        let mut counts = vec![0u64; n_types];
        for ind in pop {
            counts[ind.value] += 1;
        }
        traj.type_counts.push(counts);
        if caps.record_measures {
            let atoms = pop.iter().map(|i| Atom { label: i.label.clone(), value: i.value }).collect();
            traj.generations.push(PointMeasure::from_distinct(atoms, TimeIndex::Generation(gen)));
        }
    };
    record(&mut traj, 0, &current);
    let mut events: u64 = 0;
    for gen in 1..=n {
        let reproduce = |ind: &Individual| -> Result<Vec<Individual>, ModelError> {
            let mut stream = LabelStream::from_key(seed, ind.label.clone(), ind.key);
            let kids = model.sample_offspring(ind.value, &mut stream)?;
            kids.into_iter()
                .enumerate()
                .map(|(k, value)| {
                    let k = k as u64 + 1;
                    Ok(Individual { label: ind.label.child(k)?, key: ind.key.child(k as u32), value })
                })
                .collect()
        };
        let broods: Vec<Vec<Individual>> = if current.len() >= PAR_THRESHOLD {
            current.par_iter().map(reproduce).collect::<Result<_, _>>()?
        } else {
            current.iter().map(reproduce).collect::<Result<_, _>>()?
        };
        events += current.len() as u64;
        let size: usize = broods.iter().map(Vec::len).sum();
        if size > caps.n_cap || events > caps.max_events {
            traj.censored = true;
            traj.censored_at = Some(gen);
            break;
        }
        current = broods.into_iter().flatten().collect();
        record(&mut traj, gen, &current);
        if current.is_empty() {
            // extinct: remaining generations are empty
            for g in gen + 1..=n {
                record(&mut traj, g, &current);
            }
            break;
        }
    }
    Ok(traj)
}

/// Type counts per generation from a single founder of type `x0`, without
/// genealogy: all type-`i` parents of a generation reproduce in one
/// multinomial draw. Much faster than [`simulate_discrete`] but not
/// label-keyed; it is driven by one stream per replicate.
pub fn simulate_counts(
    model: &MultitypeGw,
    x0: usize,
    n: usize,
    n_cap: u64,
    stream: &mut LabelStream,
) -> (Vec<Vec<u64>>, bool) {
    let k = model.n_types();
    let mut counts = vec![0u64; k];
    counts[x0] = 1;
    let mut out = vec![counts.clone()];
    let mut buf = vec![0u64; k];
    for _ in 0..n {
        let mut next = vec![0u64; k];
        for (t, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            model.sampler(t).sample_counts_many(c, stream, &mut buf);
            for (a, b) in next.iter_mut().zip(&buf) {
                *a += b;
            }
        }
        if next.iter().sum::<u64>() > n_cap {
            return (out, true);
        }
        out.push(next.clone());
        counts = next;
    }
    (out, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirac(t: usize) -> PointMeasure<usize> {
        PointMeasure::dirac(t)
    }

    #[test]
    fn deterministic_doubling() {
        let m = MultitypeGw::single_type(vec![0.0, 0.0, 1.0]).unwrap();
        let t = simulate_discrete(&m, &dirac(0), 10, &SimulationCaps::default(), 1).unwrap();
        let expected: Vec<u64> = (0..=10).map(|k| 1 << k).collect();
        assert_eq!(t.sizes(), expected);
        for (n, g) in t.generations.iter().enumerate() {
            g.check_generation(n, 0).unwrap();
        }
    }

    #[test]
    fn immediate_extinction() {
        let m = MultitypeGw::single_type(vec![1.0]).unwrap();
        let t = simulate_discrete(&m, &dirac(0), 3, &SimulationCaps::default(), 1).unwrap();
        assert_eq!(t.sizes(), vec![1, 0, 0, 0]);
    }

    #[test]
    fn matrix_recursion() {
        let m = MultitypeGw::from_integer_matrix(&[vec![1, 2], vec![1, 0]]).unwrap();
        let t = simulate_discrete(&m, &dirac(0), 5, &SimulationCaps::default(), 1).unwrap();
        let mut z = [1u64, 0];
        for n in 0..=5 {
            assert_eq!(t.type_counts[n], z.to_vec());
            z = [z[0] + z[1], 2 * z[0]];
        }
    }

    #[test]
    fn censoring_keeps_prefix() {
        let m = MultitypeGw::single_type(vec![0.2, 0.3, 0.5]).unwrap();
        let small = SimulationCaps { n_cap: 50, ..SimulationCaps::default() };
        let a = simulate_discrete(&m, &dirac(0), 30, &small, 7).unwrap();
        let b = simulate_discrete(&m, &dirac(0), 30, &SimulationCaps::default(), 7).unwrap();
        assert!(a.censored);
        let k = a.type_counts.len();
        assert_eq!(&b.type_counts[..k], &a.type_counts[..]);
        assert_eq!(&b.generations[..k], &a.generations[..]);
    }

    #[test]
    fn counts_simulator_mean() {
        let m = MultitypeGw::single_type(vec![0.4, 0.0, 0.6]).unwrap();
        let mut total = 0.0;
        let reps = 4000;
        for r in 0..reps {
            let mut s = LabelStream::new(r, UlamLabel::root());
            let (c, _) = simulate_counts(&m, 0, 5, u64::MAX, &mut s);
            total += c[5][0] as f64;
        }
        let mean = total / reps as f64;
        assert!((mean - 1.2f64.powi(5)).abs() < 0.15, "{mean}");
    }
}
