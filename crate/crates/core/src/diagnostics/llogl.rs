use rayon::prelude::*;
use serde::Serialize;

use super::DiagnosticsError;
use crate::genealogy::{replicate_seed, LabelStream, PointMeasure, UlamLabel};
use crate::models::{simulate_continuous, simulate_counts, ContinuousModel, ContinuousOptions, MultitypeGw, ScalarFn, SimulationCaps};
use crate::numerics::{csum, linear_fit, log_star, LinearFit, SampleSummary};
use crate::oracle::TinyModel;

/// Censored fraction above which a warning is attached.
pub const CENSOR_WARNING: f64 = 0.01;

/// Monte Carlo `I_n = sup_x E_x[Z_n(V) log* Z_n(V)] / V*(x)` over a probe set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LlogLStats {
    /// Generations, or times for continuous-time models.
    pub steps: Vec<f64>,
    pub probes: Vec<f64>,
    pub replicates: usize,
    pub i_hat: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Index of the maximising probe at each step.
    pub argmax: Vec<usize>,
    /// `[step][probe]` summaries of `Z(V) log* Z(V) / V*(x)`.
    pub per_probe: Vec<Vec<SampleSummary>>,
    pub censored: usize,
    pub censored_fraction: f64,
    pub warning: Option<String>,
}

impl LlogLStats {
    /// Least-squares slope of `log I_hat` against the step over `[lo, hi]`.
    pub fn slope(&self, lo: f64, hi: f64) -> Option<LinearFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .steps
            .iter()
            .zip(&self.i_hat)
            .filter(|(s, i)| **s >= lo && **s <= hi && **i > 0.0)
            .map(|(s, i)| (*s, i.ln()))
            .unzip();
        linear_fit(&xs, &ys)
    }

    fn assemble(steps: Vec<f64>, probes: Vec<f64>, replicates: usize, per_probe: Vec<Vec<SampleSummary>>, censored: usize) -> Self {
        let mut i_hat = Vec::with_capacity(steps.len());
        let mut std_err = Vec::with_capacity(steps.len());
        let mut argmax = Vec::with_capacity(steps.len());
        for row in &per_probe {
            let (k, best) = row
                .iter()
                .enumerate()
                .filter(|(_, s)| s.n > 0)
                .fold((0, None::<&SampleSummary>), |acc, (k, s)| match acc.1 {
                    Some(b) if b.mean >= s.mean => acc,
                    _ => (k, Some(s)),
                });
            i_hat.push(best.map_or(f64::NAN, |s| s.mean));
            std_err.push(best.map_or(f64::NAN, |s| s.std_err));
            argmax.push(k);
        }
        let total = replicates * probes.len();
        let censored_fraction = if total == 0 { 0.0 } else { censored as f64 / total as f64 };
        let warning = (censored_fraction > CENSOR_WARNING).then(|| {
            format!("{:.2}% of replicates censored; I_hat is biased downwards", 100.0 * censored_fraction)
        });
        Self { steps, probes, replicates, i_hat, std_err, argmax, per_probe, censored, censored_fraction, warning }
    }
}

fn check_weights(v: &[f64], vstar: &[f64]) -> Result<(), DiagnosticsError> {
    for (a, b) in v.iter().zip(vstar) {
        if !(*a >= 0.0 && a.is_finite()) {
            return Err(DiagnosticsError::Input(format!("V = {a} must be finite and >= 0")));
        }
        if !(*b > 0.0) || a > b {
            return Err(DiagnosticsError::Input(format!("need 0 < V = {a} <= V* = {b}")));
        }
    }
    Ok(())
}

fn summaries(samples: Vec<Vec<Option<Vec<f64>>>>, n_steps: usize) -> (Vec<Vec<SampleSummary>>, usize) {
    // samples[probe][replicate] -> values per step
    let censored = samples.iter().flatten().filter(|s| s.is_none()).count();
    let per_probe = (0..n_steps)
        .map(|j| {
            samples
                .iter()
                .map(|reps| SampleSummary::of(&reps.iter().flatten().map(|v| v[j]).collect::<Vec<_>>()))
                .collect()
        })
        .collect();
    (per_probe, censored)
}

/// Discrete-time statistics from `replicates` count trajectories per probe
/// type; censored replicates are dropped.
#[allow(clippy::too_many_arguments)]
pub fn lloglstat_discrete(
    model: &MultitypeGw,
    v: &[f64],
    vstar: &[f64],
    probes: &[usize],
    n_list: &[usize],
    replicates: usize,
    n_cap: u64,
    seed: u64,
) -> Result<LlogLStats, DiagnosticsError> {
    if v.len() != model.n_types() || vstar.len() != model.n_types() {
        return Err(DiagnosticsError::Input("weights do not match the type set".into()));
    }
    if probes.iter().any(|&x| x >= model.n_types()) || probes.is_empty() {
        return Err(DiagnosticsError::Input("probe outside the type set".into()));
    }
    check_weights(v, vstar)?;
    let n_max = n_list.iter().copied().max().unwrap_or(0);
    let samples: Vec<Vec<Option<Vec<f64>>>> = probes
        .iter()
        .map(|&x| {
            (0..replicates)
                .into_par_iter()
                .map(|i| {
                    let mut stream =
                        LabelStream::new(replicate_seed(seed, i as u64), UlamLabel::root()).fork(b"llogl", x as u64);
                    let (counts, censored) = simulate_counts(model, x, n_max, n_cap, &mut stream);
                    (!censored).then(|| {
                        n_list
                            .iter()
                            .map(|&n| {
                                let z = csum(counts[n].iter().zip(v).map(|(&c, w)| c as f64 * w));
                                z * log_star(z) / vstar[x]
                            })
                            .collect()
                    })
                })
                .collect()
        })
        .collect();
    let (per_probe, censored) = summaries(samples, n_list.len());
    Ok(LlogLStats::assemble(
        n_list.iter().map(|&n| n as f64).collect(),
        probes.iter().map(|&x| x as f64).collect(),
        replicates,
        per_probe,
        censored,
    ))
}

/// Continuous-time statistics at the given times from `replicates` paths per
/// probe trait.
#[allow(clippy::too_many_arguments)]
pub fn lloglstat_continuous<M: ContinuousModel + ?Sized>(
    model: &M,
    v: &ScalarFn,
    vstar: &ScalarFn,
    probes: &[f64],
    times: &[f64],
    replicates: usize,
    caps: &SimulationCaps,
    seed: u64,
) -> Result<LlogLStats, DiagnosticsError> {
    if probes.is_empty() || times.is_empty() {
        return Err(DiagnosticsError::Input("empty probe or time set".into()));
    }
    check_weights(&probes.iter().map(|x| v.eval(*x)).collect::<Vec<_>>(), &probes.iter().map(|x| vstar.eval(*x)).collect::<Vec<_>>())?;
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let opts = ContinuousOptions { snapshot_times: times.to_vec(), event_functional: None };
    let mut caps = caps.clone();
    caps.record_measures = true;
    let samples = probes
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let init = PointMeasure::dirac(x);
            let vs = vstar.eval(x);
            (0..replicates)
                .into_par_iter()
                .map(|i| {
                    let s = replicate_seed(replicate_seed(seed, k as u64), i as u64);
                    let traj = simulate_continuous(model, &init, horizon, &caps, s, &opts)?;
                    Ok((!traj.censored).then(|| {
                        traj.snapshots
                            .iter()
                            .map(|m| {
                                let z = m.sum(|y| v.eval(*y));
                                z * log_star(z) / vs
                            })
                            .collect()
                    }))
                })
                .collect::<Result<Vec<_>, crate::models::ModelError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (per_probe, censored) = summaries(samples, times.len());
    Ok(LlogLStats::assemble(times.to_vec(), probes.to_vec(), replicates, per_probe, censored))
}

/// Exact `I_n` by exhaustive enumeration, with the maximising type.
pub fn exact_llogl(tiny: &TinyModel, v: &[f64], vstar: &[f64], n: usize) -> Result<(f64, usize), DiagnosticsError> {
    check_weights(v, vstar)?;
    let mut best = (f64::NEG_INFINITY, 0);
    for x in 0..tiny.n_types() {
        let e = tiny.exact_expectation(x, n, |c| {
            let z = csum(c.iter().zip(v).map(|(&k, w)| k as f64 * w));
            z * log_star(z)
        })?;
        let value = e.value / vstar[x];
        if value > best.0 {
            best = (value, x);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_child_is_constant() {
        let m = MultitypeGw::single_type(vec![0.0, 1.0]).unwrap();
        let s = lloglstat_discrete(&m, &[1.0], &[1.0], &[0], &[0, 1, 5, 10], 200, u64::MAX, 1).unwrap();
        for (i, se) in s.i_hat.iter().zip(&s.std_err) {
            assert!((i - (-1f64).exp()).abs() < 1e-15);
            assert_eq!(*se, 0.0);
        }
        let tiny = TinyModel::single_type(&[0.0, 1.0]).unwrap();
        assert!((exact_llogl(&tiny, &[1.0], &[1.0], 4).unwrap().0 - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn censoring_is_reported() {
        let m = MultitypeGw::single_type(vec![0.0, 0.0, 1.0]).unwrap();
        let s = lloglstat_discrete(&m, &[1.0], &[1.0], &[0], &[3, 6], 10, 40, 1).unwrap();
        assert_eq!(s.censored, 10);
        assert!(s.warning.is_some());
        assert!(lloglstat_discrete(&m, &[2.0], &[1.0], &[0], &[3], 10, 40, 1).is_err());
    }

    #[test]
    fn two_type_exact_matches_monte_carlo() {
        let tiny = TinyModel::two_type();
        let m = tiny.to_gw();
        let s = lloglstat_discrete(&m, &[1.0, 1.0], &[1.0, 1.0], &[0, 1], &[1, 2, 3], 20_000, u64::MAX, 5).unwrap();
        for (j, n) in [1, 2, 3].into_iter().enumerate() {
            let (exact, _) = exact_llogl(&tiny, &[1.0, 1.0], &[1.0, 1.0], n).unwrap();
            assert!((s.i_hat[j] - exact).abs() <= 4.0 * s.std_err[j], "n={n} {} vs {exact}", s.i_hat[j]);
        }
    }
}
