use serde::Serialize;

use super::offspring::CountLawSpec;
use super::{ContinuousModel, ModelError, ScalarFn};
use crate::genealogy::{LabelStream, UlamLabel};
use crate::numerics::csum;

const SERIES_TOL: f64 = 1e-12;
const SERIES_MAX_TERMS: usize = 1 << 20;

/// `sum_k k log(k) q_k` for a count law, with a bound on the neglected tail.
///
/// Finite laws are summed exactly. For geometric and Poisson laws the terms
/// `t_k` have eventually decreasing ratios `t_{k+1} / t_k = rho_k < 1`, so the
/// tail after `K` is at most `t_{K+1} / (1 - rho_{K+1})`. Returns `None` when
/// that bound does not fall below tolerance within the term budget.
pub fn kloglk_series(law: &CountLawSpec) -> Option<(f64, f64)> {
    let klogk = |k: usize| if k < 2 { 0.0 } else { k as f64 * (k as f64).ln() };
    match law {
        CountLawSpec::Probabilities { probs } => {
            Some((csum(probs.iter().enumerate().map(|(k, p)| klogk(k) * p)), 0.0))
        }
        CountLawSpec::Geometric { s } if *s == 0.0 => Some((0.0, 0.0)),
        CountLawSpec::Poisson { mean } if *mean == 0.0 => Some((0.0, 0.0)),
        CountLawSpec::Geometric { s } => {
            let q = |k: usize| (1.0 - s) * s.powi(k as i32 - 1);
            tail_series(|k| klogk(k) * q(k))
        }
        CountLawSpec::Poisson { mean } => {
            let mut log_fact = vec![0.0f64];
            tail_series(|k| {
                while log_fact.len() <= k {
                    let n = log_fact.len();
                    log_fact.push(log_fact[n - 1] + (n as f64).ln());
                }
                klogk(k) * (k as f64 * mean.ln() - mean - log_fact[k]).exp()
            })
        }
    }
}

fn tail_series(mut term: impl FnMut(usize) -> f64) -> Option<(f64, f64)> {
    let mut acc = crate::numerics::CompensatedSum::new();
    let mut t = term(2);
    let mut next = term(3);
    for k in 2..SERIES_MAX_TERMS {
        acc.add(t);
        let next2 = term(k + 2);
        if t > 0.0 && next > 0.0 && next < t {
            let rho = next2 / next;
            if rho < 1.0 && next / t >= rho {
                let rem = next / (1.0 - rho);
                if rem < SERIES_TOL * acc.value().max(1.0) {
                    return Some((acc.value(), rem));
                }
            }
        }
        t = next;
        next = next2;
    }
    None
}

/// Result of [`kloglk_bound`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KLogKBound {
    /// `sup_x B(x) sum_k k log k q_k(x)` over the probes; `None` if possibly infinite.
    pub value: Option<f64>,
    /// Bound on truncated series tails at the witness.
    pub remainder: f64,
    /// Probe attaining the supremum (or where the series failed).
    pub witness: Option<f64>,
}

/// `sup` over probes of `B(x) sum_k k log(k) q_k(x)`.
pub fn kloglk_bound<M: ContinuousModel + ?Sized>(model: &M, probes: &[f64]) -> KLogKBound {
    let mut best = KLogKBound { value: Some(f64::NEG_INFINITY), remainder: 0.0, witness: None };
    for &x in probes {
        match model.kloglk_rate(x) {
            None => return KLogKBound { value: None, remainder: f64::INFINITY, witness: Some(x) },
            Some((v, rem)) => {
                if v > best.value.unwrap_or(f64::NEG_INFINITY) {
                    best = KLogKBound { value: Some(v), remainder: rem, witness: Some(x) };
                }
            }
        }
    }
    if probes.is_empty() {
        best.value = Some(0.0);
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftVerdict {
    Finite,
    Infinite,
}

/// Supremum over probes with its witness and the verdict drawn from the
/// outer shells of the probe ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftPart {
    pub sup: f64,
    pub witness: f64,
    pub verdict: DriftVerdict,
    /// Shell-wise suprema from the inside of the domain outwards.
    pub shell_sups: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    /// `sup_x A Id_V(delta_x) / V(x)`.
    pub singleton: DriftPart,
    /// `sup_mu A F_V(mu) / F_V(mu)` over sampled finite measures.
    pub measure: DriftPart,
    /// `sup_x G V(x) / V(x)`, the motion part alone.
    pub motion_bound: f64,
}

fn expected_children_v<M: ContinuousModel + ?Sized>(model: &M, v: &ScalarFn, x: f64) -> f64 {
    csum(model.offspring_outcomes(x).iter().map(|(w, kids)| w * csum(kids.iter().map(|y| v.eval(*y)))))
}

/// `A Id_V(delta_x) / V(x) = G V / V + B (E sum_i V(x_i) - V) / V`.
pub fn singleton_ratio<M: ContinuousModel + ?Sized>(model: &M, v: &ScalarFn, x: f64) -> f64 {
    let vx = v.eval(x);
    let gv = model.motion().generator(v, x);
    let b = model.rate(x);
    let jump = if b > 0.0 { b * (expected_children_v(model, v, x) - vx) } else { 0.0 };
    (gv + jump) / vx
}

/// `A F_V(mu) / F_V(mu)` for `mu = sum_j delta_{x_j}`.
pub fn measure_ratio<M: ContinuousModel + ?Sized>(model: &M, v: &ScalarFn, f: &ScalarFn, atoms: &[f64]) -> f64 {
    let mass = csum(atoms.iter().map(|x| v.eval(*x)));
    let fm = f.eval(mass);
    let fp = f.derivative(mass);
    let motion = model.motion();
    let drift = fp * csum(atoms.iter().map(|x| motion.generator(v, *x)));
    let jumps = csum(atoms.iter().map(|&x| {
        let b = model.rate(x);
        if b == 0.0 {
            return 0.0;
        }
        let base = mass - v.eval(x);
        b * csum(model.offspring_outcomes(x).iter().map(|(w, kids)| {
            w * (f.eval(base + csum(kids.iter().map(|y| v.eval(*y)))) - fm)
        }))
    }));
    (drift + jumps) / fm
}

fn verdict(shells: &[f64]) -> DriftVerdict {
    let k = shells.len();
    if k < 3 {
        return DriftVerdict::Finite;
    }
    let (a, b, c) = (shells[k - 3], shells[k - 2], shells[k - 1]);
    let mid = shells[k / 2].abs().max(1.0);
    if a < b && b < c && c > 2.0 * mid && c - b >= 0.5 * (b - a) {
        DriftVerdict::Infinite
    } else {
        DriftVerdict::Finite
    }
}

fn part(values: &[(f64, f64)], n_shells: usize) -> DriftPart {
    let mut sup = f64::NEG_INFINITY;
    let mut witness = f64::NAN;
    for &(x, r) in values {
        if r > sup {
            sup = r;
            witness = x;
        }
    }
    let per = values.len().div_ceil(n_shells.max(1)).max(1);
    let shell_sups: Vec<f64> =
        values.chunks(per).map(|c| c.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)).collect();
    DriftPart { sup, witness, verdict: verdict(&shell_sups), shell_sups }
}

/// Drift certificates on a probe ladder.
///
/// `probes` must be ordered from the inside of the domain outwards (towards
/// infinity or the boundary): the verdict is `infinite` when the shell-wise
/// suprema of the outermost shells keep increasing and have at least doubled
/// relative to the middle shell. Measures for part (ii) are the singletons
/// plus `n_measures` random sums of up to eight probe atoms.
pub fn check_drift<M: ContinuousModel + ?Sized>(
    model: &M,
    v: &ScalarFn,
    f: &ScalarFn,
    probes: &[f64],
    n_measures: usize,
    seed: u64,
) -> Result<DriftReport, ModelError> {
    if probes.is_empty() {
        return Err(ModelError::Input("empty probe set".into()));
    }
    for &x in probes {
        let vx = v.eval(x);
        if !vx.is_finite() {
            return Err(ModelError::Input(format!("V is not finite at probe {x}")));
        }
        if vx < 1.0 {
            return Err(ModelError::Input(format!("V({x}) = {vx} < 1")));
        }
    }
    let n_shells = 8.min(probes.len());
    let singles: Vec<(f64, f64)> = probes.iter().map(|&x| (x, singleton_ratio(model, v, x))).collect();
    let motion = model.motion();
    let motion_bound = probes.iter().map(|&x| motion.generator(v, x) / v.eval(x)).fold(f64::NEG_INFINITY, f64::max);

    let mut measures: Vec<(f64, f64)> = probes.iter().map(|&x| (x, measure_ratio(model, v, f, &[x]))).collect();
    let mut stream = LabelStream::new(seed, UlamLabel::root()).fork(b"drift-measures", 0);
    for _ in 0..n_measures {
        let size = 1 + (stream.uniform() * 8.0) as usize;
        let mut atoms: Vec<usize> = (0..size).map(|_| (stream.uniform() * probes.len() as f64) as usize).collect();
        atoms.iter_mut().for_each(|i| *i = (*i).min(probes.len() - 1));
        let outer = *atoms.iter().max().expect("non-empty");
        let xs: Vec<f64> = atoms.iter().map(|&i| probes[i]).collect();
        measures.push((probes[outer], measure_ratio(model, v, f, &xs)));
    }
    // order measures by outermost atom so shells follow the probe ladder
    let pos = |x: f64| probes.iter().position(|p| *p == x).unwrap_or(0);
    measures.sort_by_key(|(x, _)| pos(*x));
    Ok(DriftReport { singleton: part(&singles, n_shells), measure: part(&measures, n_shells), motion_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BranchingDiffusion, FragmentLaw, GrowthFragmentation};

    fn ladder() -> Vec<f64> {
        (0..=80).map(|i| 2f64.powf(-4.0 + i as f64 * 0.125)).filter(|x| *x >= 1.0).collect()
    }

    #[test]
    fn binary_branching_klogk() {
        let bd = BranchingDiffusion::brownian(0.0, 1.0, 1.0, 3.0, CountLawSpec::fixed(2)).unwrap();
        let b = kloglk_bound(&bd, &[0.25, 0.5]);
        assert_eq!(b.value, Some(3.0 * 2.0 * 2f64.ln()));
        let single = BranchingDiffusion::brownian(0.0, 1.0, 1.0, 3.0, CountLawSpec::fixed(1)).unwrap();
        assert_eq!(kloglk_bound(&single, &[0.5]).value, Some(0.0));
    }

    #[test]
    fn geometric_klogk_series() {
        let (v, rem) = kloglk_series(&CountLawSpec::Geometric { s: 0.5 }).unwrap();
        // independent: plain summation far into the tail
        let direct: f64 = (2..2000).map(|k| k as f64 * (k as f64).ln() * 0.5f64.powi(k)).sum();
        assert!((v - direct).abs() < 1e-10);
        assert!(rem < 1e-10);
        assert!(kloglk_series(&CountLawSpec::Geometric { s: 1.0 - 1e-9 }).is_none());
    }

    #[test]
    fn growth_fragmentation_power_weight() {
        let gf = GrowthFragmentation::new(ScalarFn::identity(), ScalarFn::constant(1.0), FragmentLaw::Uniform).unwrap();
        let v = ScalarFn::power(1.0, 3.0);
        let r = check_drift(&gf, &v, &ScalarFn::power(1.0, 2.0), &ladder(), 50, 1).unwrap();
        assert!((r.motion_bound - 3.0).abs() < 1e-12);
        assert_eq!(r.singleton.verdict, DriftVerdict::Finite);
        // g V' / V - B alpha_3 = 3 - 1/2
        assert!((r.singleton.sup - 2.5).abs() < 1e-12);
    }

    #[test]
    fn superlinear_growth_cubic_rate() {
        let gf = GrowthFragmentation::new(ScalarFn::power(1.0, 2.0), ScalarFn::power(1.0, 3.0), FragmentLaw::Uniform)
            .unwrap();
        let v = ScalarFn::power(1.0, 2.0);
        let r = check_drift(&gf, &v, &ScalarFn::power(1.0, 2.0), &ladder(), 50, 1).unwrap();
        assert_eq!(r.singleton.verdict, DriftVerdict::Finite);
        assert_eq!(r.measure.verdict, DriftVerdict::Finite);
        for &x in &ladder() {
            let expected = 2.0 * x - x.powi(3) / 3.0;
            assert!((singleton_ratio(&gf, &v, x) - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
        assert!(r.singleton.shell_sups.last().unwrap() < &-1e3);
    }

    #[test]
    fn growth_without_fragmentation_is_infinite() {
        let gf = GrowthFragmentation::new(ScalarFn::power(1.0, 2.0), ScalarFn::constant(0.0), FragmentLaw::Uniform)
            .unwrap();
        let r = check_drift(&gf, &ScalarFn::identity(), &ScalarFn::identity(), &ladder(), 0, 1).unwrap();
        assert_eq!(r.singleton.verdict, DriftVerdict::Infinite);
    }

    #[test]
    fn non_finite_weight_rejected() {
        let gf = GrowthFragmentation::new(ScalarFn::identity(), ScalarFn::constant(1.0), FragmentLaw::Uniform).unwrap();
        let v = ScalarFn::power(1.0, -1.0);
        assert!(check_drift(&gf, &v, &ScalarFn::identity(), &[0.0, 1.0], 0, 1).is_err());
    }
}
