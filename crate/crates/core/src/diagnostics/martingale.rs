use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::DiagnosticsError;
use crate::genealogy::{replicate_seed, LabelStream, UlamLabel};
use crate::models::{
    simulate_continuous, simulate_counts, ContinuousModel, ContinuousOptions, DiscreteTrajectory, MultitypeGw,
    SimulationCaps,
};
use crate::numerics::{csum, SampleSummary};
use crate::oracle::{OracleError, TinyModel, MAX_OUTCOMES};
use crate::semigroup::{apply_t, EigenTriplet, Grid, MatrixOperator, Step};

/// Inner samples per node for the nested Monte Carlo subtree law.
pub const INNER_SAMPLES: usize = 1000;

/// Law of `(Z_r(V), Z_r(f))` from one ancestor on every node, stored as
/// weighted atoms sorted by `Z_r(V)` with running sums of `weight * Z_r(f)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubtreeLaw {
    r: u32,
    exact: bool,
    zv: Vec<Vec<f64>>,
    cum: Vec<Vec<f64>>,
}

impl SubtreeLaw {
    fn from_atoms(r: u32, exact: bool, atoms: Vec<Vec<(f64, f64, f64)>>) -> Self {
        let mut zv = Vec::with_capacity(atoms.len());
        let mut cum = Vec::with_capacity(atoms.len());
        for mut node in atoms {
            node.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut acc = crate::numerics::CompensatedSum::new();
            let mut c = Vec::with_capacity(node.len() + 1);
            c.push(0.0);
            for (_, w, f) in &node {
                acc.add(w * f);
                c.push(acc.value());
            }
            zv.push(node.iter().map(|a| a.0).collect());
            cum.push(c);
        }
        Self { r, exact, zv, cum }
    }

    /// Exhaustive law over all labelled `r`-generation trees.
    pub fn exact(tiny: &TinyModel, r: u32, f: &[f64], v: &[f64]) -> Result<Self, DiagnosticsError> {
        let mut atoms = Vec::with_capacity(tiny.n_types());
        for x in 0..tiny.n_types() {
            let dist = tiny.exact_distribution(x, r as usize)?;
            atoms.push(dist.into_iter().map(|(c, p)| (dot(&c, v), p, dot(&c, f))).collect());
        }
        Ok(Self::from_atoms(r, true, atoms))
    }

    /// `samples` independent `r`-generation subtrees per node, drawn from
    /// streams forked off `seed`.
    pub fn monte_carlo(
        model: &MultitypeGw,
        r: u32,
        f: &[f64],
        v: &[f64],
        samples: usize,
        seed: u64,
    ) -> Result<Self, DiagnosticsError> {
        let w = 1.0 / samples as f64;
        let mut atoms = Vec::with_capacity(model.n_types());
        for x in 0..model.n_types() {
            let root = LabelStream::new(seed, UlamLabel::root()).fork(b"subtree-law", x as u64);
            let node: Vec<(f64, f64, f64)> = (0..samples)
                .map(|s| {
                    let mut stream = root.fork(b"inner", s as u64);
                    let (counts, censored) = simulate_counts(model, x, r as usize, u64::MAX, &mut stream);
                    debug_assert!(!censored);
                    let last = &counts[counts.len() - 1];
                    (dot(last, v), w, dot(last, f))
                })
                .collect();
            atoms.push(node);
        }
        Ok(Self::from_atoms(r, false, atoms))
    }

    /// Enumeration when every law is supported on at most 4 children, `r <= 3`
    /// and the tree count is within the oracle bound; nested Monte Carlo otherwise.
    pub fn for_model(model: &MultitypeGw, r: u32, f: &[f64], v: &[f64], seed: u64) -> Result<Self, DiagnosticsError> {
        if r <= 3 {
            if let Ok(tiny) = TinyModel::from_gw(model) {
                if tiny.enumeration_size(r as usize).iter().all(|s| *s <= MAX_OUTCOMES) {
                    return Self::exact(&tiny, r, f, v);
                }
            }
        }
        Self::monte_carlo(model, r, f, v, INNER_SAMPLES, seed)
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn step(&self) -> u32 {
        self.r
    }

    /// `E_{delta_x}[Z_r(f) 1{Z_r(V) <= c}]`.
    pub fn truncated(&self, x: usize, c: f64) -> f64 {
        let k = self.zv[x].partition_point(|z| *z <= c);
        self.cum[x][k]
    }

    /// `E_{delta_x}[Z_r(f)]` under this law.
    pub fn mean(&self, x: usize) -> f64 {
        *self.cum[x].last().expect("non-empty")
    }
}

fn dot(c: &[u64], v: &[f64]) -> f64 {
    csum(c.iter().zip(v).map(|(&k, w)| k as f64 * w))
}

/// One path of `X_n = lambda^{-n} Z_{nr}(f)` with its martingale increments
/// and their truncation split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleTrace {
    pub r: u32,
    pub f_name: String,
    /// `X_n(f)`, `n = 0..=N`.
    pub values: Vec<f64>,
    /// `Delta_n(f) = X_n(f) - E[X_n(f) | F_{n-1}]`; entry 0 is zero.
    pub increments: Vec<f64>,
    /// Part of `Delta_n` from ancestors with `Z_r^{(u)}(V) <= lambda^{nr}`.
    pub a: Vec<f64>,
    /// Complementary part.
    pub b: Vec<f64>,
    /// `max_n |Delta_n - A_n - B_n| / scale_n`.
    pub split_error: f64,
    /// `X_N(h)`.
    pub w_hat: f64,
}

fn step_generations(op: &MatrixOperator) -> Result<u32, DiagnosticsError> {
    match op.step() {
        Step::Generations(r) if r >= 1 => Ok(r),
        s => Err(DiagnosticsError::Input(format!("need an operator over r >= 1 generations, got {s:?}"))),
    }
}

/// `lambda^{-n} Z_{nr}(g)` for `n = 0..=N`.
fn scaled_values(traj: &DiscreteTrajectory, r: u32, lambda: f64, g: &[f64]) -> Vec<f64> {
    let n_max = traj.last_generation() / r as usize;
    (0..=n_max).map(|n| traj.functional(n * r as usize, g) / lambda.powi(n as i32)).collect()
}

/// `X_n`, `Delta_n`, `A_n`, `B_n` along a labelled trajectory. `Delta_n` is
/// computed from generation totals; `A_n` and `B_n` from per-ancestor
/// subtree masses, centred by `law` and by its complement in `K f`.
pub fn martingale_trace(
    traj: &DiscreteTrajectory,
    op: &MatrixOperator,
    triplet: &EigenTriplet,
    f: &[f64],
    f_name: &str,
    v: &[f64],
    law: &SubtreeLaw,
) -> Result<MartingaleTrace, DiagnosticsError> {
    let r = step_generations(op)?;
    if law.step() != r {
        return Err(DiagnosticsError::Input(format!("subtree law over {} generations, operator over {r}", law.step())));
    }
    if !traj.has_labels() {
        return Err(DiagnosticsError::Input("trajectory was recorded without labels".into()));
    }
    let k = op.len();
    if f.len() != k || v.len() != k {
        return Err(DiagnosticsError::Input("functional does not match the type set".into()));
    }
    let lambda = triplet.lambda;
    let kf = op.apply(f);
    let kf_scaled: Vec<f64> = kf.iter().map(|x| x / lambda).collect();
    let values = scaled_values(traj, r, lambda, f);
    let prev = scaled_values(traj, r, lambda, &kf_scaled);
    let n_max = values.len() - 1;
    let mut increments = vec![0.0];
    let mut a = vec![0.0];
    let mut b = vec![0.0];
    let mut split_error: f64 = 0.0;
    for n in 1..=n_max {
        let parents = &traj.generations[(n - 1) * r as usize];
        let children = &traj.generations[n * r as usize];
        let mut sub: HashMap<UlamLabel, (Vec<f64>, Vec<f64>)> = HashMap::new();
        let depth = parents.atoms().first().map(|p| p.label.depth());
        if let Some(d) = depth {
            for c in children.atoms() {
                let e = sub.entry(c.label.truncate(d)).or_default();
                e.0.push(f[c.value]);
                e.1.push(v[c.value]);
            }
        }
        let c = lambda.powi(n as i32);
        let (mut an, mut bn, mut scale) = (Vec::new(), Vec::new(), Vec::new());
        for p in parents.atoms() {
            let (zf, zv) = sub.get(&p.label).map(|(fs, vs)| (csum(fs.iter().copied()), csum(vs.iter().copied()))).unwrap_or((0.0, 0.0));
            let t = law.truncated(p.value, c);
            let small = zv <= c;
            an.push(if small { zf } else { 0.0 } - t);
            bn.push(if small { 0.0 } else { zf } - (kf[p.value] - t));
            scale.push(zf.abs() + kf[p.value].abs());
        }
        let delta = values[n] - prev[n - 1];
        let an = csum(an) / c;
        let bn = csum(bn) / c;
        let scale = (csum(scale) / c).max(delta.abs()).max(f64::MIN_POSITIVE);
        split_error = split_error.max((delta - an - bn).abs() / scale);
        increments.push(delta);
        a.push(an);
        b.push(bn);
    }
    let w_hat = *scaled_values(traj, r, lambda, &triplet.h).last().expect("at least generation 0");
    Ok(MartingaleTrace { r, f_name: f_name.to_string(), values, increments, a, b, split_error, w_hat })
}

/// The rest term `R_n` of `X_n(f) = X_0(T^n f) + gamma(f) X_{n-1}(h) + R_n`,
/// computed as the residual of that identity and as
/// `sum_{i <= n} Delta_i(T^{n-i} f)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestTerm {
    /// Residual route, `n = 1..=N`.
    pub residual: Vec<f64>,
    /// Increment route, `n = 1..=N`.
    pub increments: Vec<f64>,
    /// `max_n |residual_n - increments_n| / scale_n`.
    pub max_rel_diff: f64,
}

pub fn rest_term(
    traj: &DiscreteTrajectory,
    op: &MatrixOperator,
    triplet: &EigenTriplet,
    f: &[f64],
) -> Result<RestTerm, DiagnosticsError> {
    let r = step_generations(op)?;
    let lambda = triplet.lambda;
    let n_max = traj.last_generation() / r as usize;
    // powers[k] = T^k f
    let mut powers = vec![f.to_vec()];
    for _ in 0..n_max {
        let next = apply_t(op, triplet, powers.last().expect("non-empty"));
        powers.push(next);
    }
    let x = |n: usize, g: &[f64]| traj.functional(n * r as usize, g) / lambda.powi(n as i32);
    let abs = |g: &[f64]| g.iter().map(|v| v.abs()).collect::<Vec<_>>();
    // (Delta_i(g), magnitude of its two terms)
    let delta = |i: usize, g: &[f64]| {
        let kg: Vec<f64> = op.apply(g).iter().map(|v| v / lambda).collect();
        (x(i, g) - x(i - 1, &kg), x(i, &abs(g)) + x(i - 1, &abs(&kg)))
    };
    let gf = triplet.gamma_of(f);
    let mut residual = Vec::with_capacity(n_max);
    let mut increments = Vec::with_capacity(n_max);
    let mut max_rel_diff: f64 = 0.0;
    for n in 1..=n_max {
        let xn = x(n, f);
        let x0 = x(0, &powers[n]);
        let xh = gf * x(n - 1, &triplet.h);
        let ra = xn - x0 - xh;
        let terms: Vec<(f64, f64)> = (1..=n).map(|i| delta(i, &powers[n - i])).collect();
        let rb = csum(terms.iter().map(|t| t.0));
        let size = x(n, &abs(f)) + x(0, &abs(f)) + gf.abs() * x(n - 1, &abs(&triplet.h));
        let scale = size.max(csum(terms.iter().map(|t| t.1))).max(f64::MIN_POSITIVE);
        max_rel_diff = max_rel_diff.max((ra - rb).abs() / scale);
        residual.push(ra);
        increments.push(rb);
    }
    Ok(RestTerm { residual, increments, max_rel_diff })
}

/// Cross-replicate summary of `X_t(h) = e^{-Lambda t} Z_t(h)` for a
/// continuous-trait model, `h` interpolated from the grid triplet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousMartingale {
    pub times: Vec<f64>,
    pub summaries: Vec<SampleSummary>,
    pub h_x0: f64,
    pub censored: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn continuous_martingale<M: ContinuousModel + ?Sized>(
    model: &M,
    grid: &Grid,
    triplet: &EigenTriplet,
    x0: f64,
    times: &[f64],
    replicates: usize,
    caps: &SimulationCaps,
    seed: u64,
) -> Result<ContinuousMartingale, DiagnosticsError> {
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let opts = ContinuousOptions { snapshot_times: times.to_vec(), event_functional: None };
    let mut caps = caps.clone();
    caps.record_measures = true;
    let h = |x: f64| grid.interpolate(&triplet.h, x);
    let init = crate::genealogy::PointMeasure::dirac(x0);
    let paths: Vec<Option<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let traj = simulate_continuous(model, &init, horizon, &caps, replicate_seed(seed, i as u64), &opts)?;
            if traj.censored {
                return Ok(None);
            }
            Ok(Some(
                traj.snapshots
                    .iter()
                    .zip(times)
                    .map(|(m, t)| (-triplet.rate * t).exp() * m.sum(|x| h(*x)))
                    .collect(),
            ))
        })
        .collect::<Result<_, crate::models::ModelError>>()?;
    let kept: Vec<&Vec<f64>> = paths.iter().flatten().collect();
    let summaries = (0..times.len())
        .map(|j| SampleSummary::of(&kept.iter().map(|p| p[j]).collect::<Vec<_>>()))
        .collect();
    Ok(ContinuousMartingale {
        times: times.to_vec(),
        summaries,
        h_x0: h(x0),
        censored: replicates - kept.len(),
    })
}

impl From<OracleError> for DiagnosticsError {
    fn from(e: OracleError) -> Self {
        DiagnosticsError::Oracle(e)
    }
}
