use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::{ContinuousModel, ModelError, Motion, ScalarFn, SimulationCaps};
use crate::genealogy::{Atom, LabelKey, LabelStream, PointMeasure, TimeIndex, UlamLabel};
use crate::numerics::CompensatedSum;

/// State of an individual when its life ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LifeEnd {
    /// Branching event at the given trait.
    Branched(f64),
    /// Killed on the boundary of the domain.
    Absorbed,
    /// Still alive at the horizon, with its trait there.
    Survived(f64),
}

/// First branching time of a single individual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstBranch {
    /// `+inf` when the individual never branches.
    pub time: f64,
    pub end: LifeEnd,
}

fn linear_growth(g: &ScalarFn) -> Option<f64> {
    match g {
        ScalarFn::Affine { intercept, slope } if *intercept == 0.0 => Some(*slope),
        ScalarFn::Power { coef, exponent } if *exponent == 1.0 => Some(*coef),
        _ => None,
    }
}

fn rk4(g: &ScalarFn, x: f64, h: f64) -> f64 {
    let k1 = g.eval(x);
    let k2 = g.eval(x + 0.5 * h * k1);
    let k3 = g.eval(x + 0.5 * h * k2);
    let k4 = g.eval(x + h * k3);
    x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Deterministic flow of a trait for `s` time units, when the motion is deterministic.
pub fn flow(motion: &Motion<'_>, x: f64, s: f64, ode_dt: f64) -> Option<f64> {
    match motion {
        Motion::Static => Some(x),
        Motion::Ode { growth } => Some(match linear_growth(growth) {
            Some(c) => x * (c * s).exp(),
            None => {
                let steps = (s / ode_dt).ceil().max(1.0) as usize;
                let h = s / steps as f64;
                (0..steps).fold(x, |y, _| rk4(growth, y, h))
            }
        }),
        Motion::Sde { .. } => None,
    }
}

enum Stop {
    Reached,
    Exit,
    Absorbed,
}

/// Simulates one life from `(t0, x0)` until branching, absorption or `horizon`.
///
/// Branching times follow `inf { t : int_0^t B(Y_s) ds >= E }` realised by
/// thinning: on the sublevel set `O_m` currently containing the trait,
/// proposals arrive at rate `sup_{O_m} B` and are accepted with probability
/// `B(Y) / sup_{O_m} B`; leaving `O_m` discards the pending proposal and
/// moves to the next set. `on_snapshot(i, x)` is called for every grid time
/// `snapshots[i]` in `[t0, end)` (and at the horizon for survivors).
pub fn run_life<M: ContinuousModel + ?Sized>(
    model: &M,
    x0: f64,
    t0: f64,
    horizon: f64,
    caps: &SimulationCaps,
    stream: &mut LabelStream,
    snapshots: &[f64],
    on_snapshot: &mut dyn FnMut(usize, f64),
) -> Result<(f64, LifeEnd), ModelError> {
    let motion = model.motion();
    let mut t = t0;
    let mut x = x0;
    let mut m = model.cell_index(x);
    let mut next_snap = snapshots.partition_point(|s| *s < t0);
    let mut proposals: u64 = 0;
    let mut rate_x = x0;
    let linear = match motion {
        Motion::Ode { growth } => linear_growth(growth),
        _ => None,
    };
    loop {
        proposals += 1;
        if proposals > caps.max_events {
            return Err(ModelError::Budget(format!("more than {} thinning proposals in one life", caps.max_events)));
        }
        let bound = match motion {
            Motion::Static => model.rate(x),
            _ => model.rate_bound(m),
        };
        if !(bound.is_finite() && bound >= 0.0) {
            let (lo, hi) = model.cell(m);
            return Err(ModelError::RateUnbounded { cell: m, lo, hi });
        }
        let target = if bound > 0.0 { t + stream.exp1() / bound } else { f64::INFINITY };
        let stop_at = target.min(horizon);
        let (lo_m, hi_m) = model.cell(m);
        let stop = match motion {
            Motion::Static => {
                while next_snap < snapshots.len() && snapshots[next_snap] < stop_at {
                    on_snapshot(next_snap, x);
                    next_snap += 1;
                }
                t = stop_at;
                Stop::Reached
            }
            Motion::Ode { growth } => {
                if let Some(c) = linear {
                    let exit = if c > 0.0 {
                        t + (hi_m / x).ln() / c
                    } else if c < 0.0 && lo_m > 0.0 {
                        t + (lo_m / x).ln() / c
                    } else {
                        f64::INFINITY
                    };
                    let until = stop_at.min(exit);
                    while next_snap < snapshots.len() && snapshots[next_snap] < until {
                        on_snapshot(next_snap, x * (c * (snapshots[next_snap] - t)).exp());
                        next_snap += 1;
                    }
                    if exit < stop_at {
                        x = if c > 0.0 { hi_m } else { lo_m };
                        t = exit;
                        Stop::Exit
                    } else {
                        x *= (c * (stop_at - t)).exp();
                        t = stop_at;
                        Stop::Reached
                    }
                } else {
                    let mut stop = Stop::Reached;
                    while t < stop_at {
                        let mut h = caps.ode_dt.min(stop_at - t);
                        let snap_hit = next_snap < snapshots.len() && snapshots[next_snap] <= t + h;
                        if snap_hit {
                            h = snapshots[next_snap] - t;
                        }
                        let y = if h > 0.0 { rk4(growth, x, h) } else { x };
                        if !(y.is_finite()) || y > hi_m || y < lo_m {
                            stop = Stop::Exit;
                            break;
                        }
                        x = y;
                        t = if snap_hit { snapshots[next_snap] } else { t + h };
                        if snap_hit {
                            on_snapshot(next_snap, x);
                            next_snap += 1;
                        }
                    }
                    stop
                }
            }
            Motion::Sde { drift, sigma, lo, hi } => {
                let mut stop = Stop::Reached;
                rate_x = x;
                while t < stop_at {
                    let mut h = caps.sde_dt.min(stop_at - t);
                    let snap_hit = next_snap < snapshots.len() && snapshots[next_snap] <= t + h;
                    if snap_hit {
                        h = snapshots[next_snap] - t;
                    }
                    if h > 0.0 {
                        let s = sigma.eval(x);
                        let y = x + drift.eval(x) * h + s * h.sqrt() * stream.normal();
                        if y <= lo || y >= hi {
                            t += h;
                            stop = Stop::Absorbed;
                            break;
                        }
                        let v = s * s * h;
                        let p = (-2.0 * (x - lo) * (y - lo) / v).exp() + (-2.0 * (hi - x) * (hi - y) / v).exp();
                        if p > 1e-15 && stream.uniform() < p {
                            t += h;
                            stop = Stop::Absorbed;
                            break;
                        }
                        rate_x = x;
                        x = y;
                    }
                    t = if snap_hit { snapshots[next_snap] } else { t + h };
                    if snap_hit {
                        on_snapshot(next_snap, x);
                        next_snap += 1;
                    }
                    if t < stop_at && (x < lo_m || x > hi_m) {
                        stop = Stop::Exit;
                        break;
                    }
                }
                stop
            }
        };
        match stop {
            Stop::Absorbed => return Ok((t, LifeEnd::Absorbed)),
            Stop::Exit => {
                m = (m + 1).max(model.cell_index(x));
            }
            Stop::Reached => {
                if t >= horizon {
                    while next_snap < snapshots.len() && snapshots[next_snap] <= horizon {
                        on_snapshot(next_snap, x);
                        next_snap += 1;
                    }
                    return Ok((horizon, LifeEnd::Survived(x)));
                }
                let accept = match motion {
                    Motion::Static => true,
                    // the rate is frozen over an Euler step at its left end
                    Motion::Sde { .. } => stream.uniform() * bound <= model.rate(rate_x),
                    _ => stream.uniform() * bound <= model.rate(x),
                };
                if accept {
                    return Ok((t, LifeEnd::Branched(x)));
                }
                if x < lo_m || x > hi_m {
                    m = (m + 1).max(model.cell_index(x));
                }
            }
        }
    }
}

/// First branching time of an individual with trait `x0` at time 0.
pub fn first_branch_time<M: ContinuousModel + ?Sized>(
    model: &M,
    x0: f64,
    horizon: f64,
    caps: &SimulationCaps,
    stream: &mut LabelStream,
) -> Result<FirstBranch, ModelError> {
    if matches!(model.motion(), Motion::Static) && model.rate(x0) == 0.0 {
        return Ok(FirstBranch { time: f64::INFINITY, end: LifeEnd::Survived(x0) });
    }
    let (t, end) = run_life(model, x0, 0.0, horizon, caps, stream, &[], &mut |_, _| {})?;
    let time = match end {
        LifeEnd::Branched(_) | LifeEnd::Absorbed => t,
        LifeEnd::Survived(_) => f64::INFINITY,
    };
    Ok(FirstBranch { time, end })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EventKind {
    Branch { children: usize },
    Absorption,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub label: UlamLabel,
    /// Population right after the event.
    pub population: usize,
}

/// Why a continuous trajectory stopped before the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CensorReason {
    Population,
    Events,
    Region,
}

/// Options of [`simulate_continuous`].
#[derive(Debug, Clone, Default)]
pub struct ContinuousOptions {
    /// Increasing snapshot times in `[0, horizon]`.
    pub snapshot_times: Vec<f64>,
    /// Functional evaluated right after every event (deterministic motion only).
    pub event_functional: Option<ScalarFn>,
}

impl ContinuousOptions {
    /// `n + 1` equally spaced snapshots on `[0, horizon]`.
    pub fn uniform_grid(horizon: f64, n: usize) -> Self {
        Self {
            snapshot_times: (0..=n).map(|i| horizon * i as f64 / n as f64).collect(),
            event_functional: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousTrajectory {
    pub horizon: f64,
    pub events: Vec<EventRecord>,
    /// `Z_t(f)` right after each event; `None` unless requested and the motion is deterministic.
    pub event_functionals: Option<Vec<f64>>,
    pub snapshot_times: Vec<f64>,
    /// Measures at the snapshot times; empty when measures are not recorded.
    pub snapshots: Vec<PointMeasure<f64>>,
    pub snapshot_sizes: Vec<usize>,
    /// Population at the horizon; `None` if censored.
    pub final_measure: Option<PointMeasure<f64>>,
    pub censored: bool,
    pub censor_time: Option<f64>,
    pub censor_reason: Option<CensorReason>,
}

impl ContinuousTrajectory {
    /// `Z_T(f)` at the horizon.
    pub fn final_functional(&self, f: impl Fn(f64) -> f64) -> Option<f64> {
        self.final_measure.as_ref().map(|m| m.sum(|x| f(*x)))
    }
}

struct Particle {
    label: UlamLabel,
    key: LabelKey,
    birth_time: f64,
    birth_x: f64,
    end: LifeEnd,
    alive_slot: usize,
}

#[derive(PartialEq)]
struct Pending {
    time: f64,
    index: usize,
    label: UlamLabel,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (time, label)
        other.time.total_cmp(&self.time).then_with(|| other.label.cmp(&self.label))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Event-driven simulation of the branching process up to `horizon`.
///
/// Each individual's whole life is drawn at birth from its own label stream;
/// ends of lives are then processed in time order, which is what makes the
/// population caps (the stopping times `T_n`) observable.
pub fn simulate_continuous<M: ContinuousModel + ?Sized>(
    model: &M,
    init: &PointMeasure<f64>,
    horizon: f64,
    caps: &SimulationCaps,
    seed: u64,
    opts: &ContinuousOptions,
) -> Result<ContinuousTrajectory, ModelError> {
    caps.validate()?;
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(ModelError::InvalidSpec(format!("horizon {horizon} must be finite and >= 0")));
    }
    if opts.snapshot_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(ModelError::InvalidSpec("snapshot times must be increasing".into()));
    }
    let motion = model.motion();
    let (dlo, dhi) = model.domain();
    let snaps = &opts.snapshot_times;
    let mut snap_atoms: Vec<Vec<Atom<f64>>> = vec![Vec::new(); snaps.len()];
    let mut snap_sizes = vec![0usize; snaps.len()];
    let mut particles: Vec<Particle> = Vec::new();
    let mut alive: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();
    let region = caps.region_index.map(|m| model.cell(m));

    let mut spawn = |label: UlamLabel,
                     key: LabelKey,
                     t: f64,
                     x: f64,
                     particles: &mut Vec<Particle>,
                     alive: &mut Vec<usize>,
                     heap: &mut BinaryHeap<Pending>|
     -> Result<(), ModelError> {
        if !(x > dlo && x < dhi) && !(x >= dlo && x <= dhi && matches!(motion, Motion::Static)) {
            return Err(ModelError::Domain(format!("trait {x} of {label} outside the domain")));
        }
        let mut stream = LabelStream::from_key(seed, label.clone(), key);
        let mut record = |i: usize, y: f64| {
            snap_sizes[i] += 1;
            if caps.record_measures {
                snap_atoms[i].push(Atom { label: label.clone(), value: y });
            }
        };
        let (end_time, end) = run_life(model, x, t, horizon, caps, &mut stream, snaps, &mut record)?;
        let index = particles.len();
        particles.push(Particle { label: label.clone(), key, birth_time: t, birth_x: x, end, alive_slot: alive.len() });
        alive.push(index);
        heap.push(Pending { time: end_time, index, label });
        Ok(())
    };

    for a in init.atoms() {
        spawn(a.label.clone(), LabelKey::for_label(seed, &a.label), 0.0, a.value, &mut particles, &mut alive, &mut heap)?;
    }
    let functional = match (&opts.event_functional, motion) {
        (Some(f), Motion::Static | Motion::Ode { .. }) => Some(f.clone()),
        _ => None,
    };
    let mut event_values = functional.as_ref().map(|_| Vec::new());
    let mut events = Vec::new();
    let mut censor: Option<(f64, CensorReason)> = None;
    let mut survivors: Vec<usize> = Vec::new();

    while let Some(Pending { time, index, .. }) = heap.pop() {
        let end = particles[index].end;
        let slot = particles[index].alive_slot;
        let (label, key) = (particles[index].label.clone(), particles[index].key);
        match end {
            LifeEnd::Survived(_) => {
                survivors.push(index);
                continue;
            }
            LifeEnd::Absorbed | LifeEnd::Branched(_) => {
                let last = alive.pop().expect("alive particle");
                if last != index {
                    alive[slot] = last;
                    particles[last].alive_slot = slot;
                }
            }
        }
        let kind = match end {
            LifeEnd::Branched(x) => {
                let mut stream = LabelStream::from_key(seed, label.clone(), key).fork(b"offspring", 0);
                let kids = model.sample_offspring(x, &mut stream);
                for (k, y) in kids.iter().enumerate() {
                    let k = k as u64 + 1;
                    if let Some((lo, hi)) = region {
                        if (*y < lo || *y > hi) && censor.is_none() {
                            censor = Some((time, CensorReason::Region));
                        }
                    }
                    spawn(label.child(k)?, key.child(k as u32), time, *y, &mut particles, &mut alive, &mut heap)?;
                }
                EventKind::Branch { children: kids.len() }
            }
            _ => EventKind::Absorption,
        };
        events.push(EventRecord { time, kind, label, population: alive.len() });
        if let (Some(f), Some(vals)) = (&functional, event_values.as_mut()) {
            let mut acc = CompensatedSum::new();
            for &i in &alive {
                let p = &particles[i];
                let y = flow(&motion, p.birth_x, time - p.birth_time, caps.ode_dt).expect("deterministic motion");
                acc.add(f.eval(y));
            }
            vals.push(acc.value());
        }
        if censor.is_none() {
            if alive.len() > caps.n_cap {
                censor = Some((time, CensorReason::Population));
            } else if events.len() as u64 >= caps.max_events {
                censor = Some((time, CensorReason::Events));
            }
        }
        if censor.is_some() {
            break;
        }
    }

    let (censored, censor_time, censor_reason) = match censor {
        Some((t, r)) => (true, Some(t), Some(r)),
        None => (false, None, None),
    };
    let keep = match censor_time {
        Some(tc) => snaps.partition_point(|s| *s < tc),
        None => snaps.len(),
    };
    snap_sizes.truncate(keep);
    let snapshots = if caps.record_measures {
        snap_atoms
            .into_iter()
            .take(keep)
            .zip(snaps)
            .map(|(atoms, &s)| PointMeasure::from_distinct(atoms, TimeIndex::Time(s)))
            .collect()
    } else {
        Vec::new()
    };
    let final_measure = if censored {
        None
    } else {
        let atoms = survivors
            .iter()
            .map(|&i| match particles[i].end {
                LifeEnd::Survived(x) => Atom { label: particles[i].label.clone(), value: x },
                _ => unreachable!(),
            })
            .collect();
        Some(PointMeasure::from_distinct(atoms, TimeIndex::Time(horizon)))
    };
    Ok(ContinuousTrajectory {
        horizon,
        events,
        event_functionals: event_values,
        snapshot_times: snaps[..keep].to_vec(),
        snapshots,
        snapshot_sizes: snap_sizes,
        final_measure,
        censored,
        censor_time,
        censor_reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{BranchingDiffusion, CountLawSpec, FragmentLaw, GrowthFragmentation, HouseOfCards};
    use crate::numerics::SampleSummary;

    fn caps() -> SimulationCaps {
        SimulationCaps::default()
    }

    #[test]
    fn homogeneous_clock() {
        let m = HouseOfCards::new(ScalarFn::constant(2.5), CountLawSpec::fixed(2), 0.0).unwrap();
        let draws: Vec<f64> = (0..100_000u64)
            .map(|i| {
                let mut s = LabelStream::new(i, UlamLabel::root());
                first_branch_time(&m, 0.3, f64::INFINITY, &caps(), &mut s).unwrap().time
            })
            .collect();
        let s = SampleSummary::of(&draws);
        assert!(s.within(0.4, 3.0), "{s:?}");
    }

    #[test]
    fn zero_rate_never_branches() {
        let m = HouseOfCards::new(ScalarFn::constant(0.0), CountLawSpec::fixed(2), 0.0).unwrap();
        let mut s = LabelStream::new(1, UlamLabel::root());
        assert_eq!(first_branch_time(&m, 0.3, f64::INFINITY, &caps(), &mut s).unwrap().time, f64::INFINITY);
    }

    #[test]
    fn ode_flow_without_branching() {
        let gf = GrowthFragmentation::new(ScalarFn::identity(), ScalarFn::constant(0.0), FragmentLaw::Uniform)
            .unwrap();
        let t = simulate_continuous(&gf, &PointMeasure::dirac(1.0), 1.0, &caps(), 3, &Default::default())
            .unwrap();
        let fin = t.final_measure.unwrap();
        assert_eq!(fin.len(), 1);
        assert!((fin.atoms()[0].value - std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn integrated_rate_inverse_cdf() {
        // g = id from 1, B(x) = x: int_0^t e^s ds = E gives t = log(1 + E)
        let gf = GrowthFragmentation::new(ScalarFn::identity(), ScalarFn::identity(), FragmentLaw::Uniform).unwrap();
        let n = 100_000u64;
        let mut draws: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = LabelStream::new(i, UlamLabel::root());
                first_branch_time(&gf, 1.0, f64::INFINITY, &caps(), &mut s).unwrap().time
            })
            .collect();
        draws.sort_by(f64::total_cmp);
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let cdf = 1.0 - (-(t.exp() - 1.0)).exp();
                ((i + 1) as f64 / n as f64 - cdf).abs().max((cdf - i as f64 / n as f64).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "ks = {ks}");
    }

    #[test]
    fn fragmentation_mass_conservation() {
        let gf = GrowthFragmentation::new(ScalarFn::identity(), ScalarFn::constant(1.0), FragmentLaw::Uniform).unwrap();
        let opts = ContinuousOptions { snapshot_times: vec![], event_functional: Some(ScalarFn::identity()) };
        for seed in 0..20 {
            let t = simulate_continuous(&gf, &PointMeasure::dirac(0.7), 4.0, &caps(), seed, &opts).unwrap();
            for (e, v) in t.events.iter().zip(t.event_functionals.as_ref().unwrap()) {
                assert!(((-e.time).exp() * v - 0.7).abs() / 0.7 < 1e-9);
            }
            let total = t.final_functional(|x| x).unwrap();
            assert!(((-4.0f64).exp() * total - 0.7).abs() < 1e-9 * 0.7);
        }
    }

    #[test]
    fn absorbed_never_reappear() {
        let bd = BranchingDiffusion::brownian(0.0, 1.0, 1.0, 0.0, CountLawSpec::fixed(2)).unwrap();
        let opts = ContinuousOptions::uniform_grid(1.0, 20);
        for seed in 0..20 {
            let t = simulate_continuous(&bd, &PointMeasure::dirac(0.5), 1.0, &caps(), seed, &opts).unwrap();
            assert!(t.snapshot_sizes.windows(2).all(|w| w[1] <= w[0]));
            assert!(t.events.iter().all(|e| e.kind == EventKind::Absorption));
        }
    }

    #[test]
    fn coarse_steps_keep_the_branching_rate() {
        // E Z_t(sin(pi x)) = e^{(6 - pi^2/2) t} sin(pi x0) for binary BBM killed outside (0, 1)
        use std::f64::consts::PI;
        let bd = BranchingDiffusion::brownian(0.0, 1.0, 1.0, 6.0, CountLawSpec::fixed(2)).unwrap();
        let coarse = SimulationCaps { sde_dt: 1e-2, record_measures: true, ..caps() };
        let opts = ContinuousOptions { snapshot_times: vec![0.5], event_functional: None };
        let xs: Vec<f64> = (0..10_000u64)
            .map(|i| {
                let t = simulate_continuous(&bd, &PointMeasure::dirac(0.5), 0.5, &coarse, i, &opts).unwrap();
                t.snapshots[0].sum(|x| (PI * x).sin()) * ((PI * PI / 2.0 - 6.0) * 0.5).exp()
            })
            .collect();
        let s = SampleSummary::of(&xs);
        assert!(s.within(1.0, 4.0), "{s:?}");
    }

    #[test]
    fn censoring_prefix_is_stable() {
        let gf = GrowthFragmentation::new(ScalarFn::identity(), ScalarFn::constant(1.0), FragmentLaw::Uniform).unwrap();
        let small = SimulationCaps { n_cap: 20, ..caps() };
        let opts = ContinuousOptions::uniform_grid(6.0, 60);
        let a = simulate_continuous(&gf, &PointMeasure::dirac(1.0), 6.0, &small, 11, &opts).unwrap();
        let b = simulate_continuous(&gf, &PointMeasure::dirac(1.0), 6.0, &caps(), 11, &opts).unwrap();
        assert!(a.censored && !b.censored);
        let k = a.events.len();
        assert_eq!(&a.events[..], &b.events[..k]);
        assert_eq!(&a.snapshots[..], &b.snapshots[..a.snapshots.len()]);
    }
}
