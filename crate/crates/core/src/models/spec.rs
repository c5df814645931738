use serde::{Deserialize, Serialize};

use super::offspring::{CountLaw, CountLawSpec, FragmentLaw, TypeLaw, TypeSampler};
use super::{ModelError, ScalarFn};
use crate::genealogy::LabelStream;

/// Discrete generations or continuous time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeMode {
    Discrete,
    Continuous,
}

/// Resource bounds of one simulated trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationCaps {
    /// Censor once the population exceeds this size.
    pub n_cap: usize,
    /// Censor once this many branching or absorption events happened.
    pub max_events: u64,
    /// Censor once a trait leaves the sublevel set with this index.
    pub region_index: Option<usize>,
    /// Euler-Maruyama step.
    pub sde_dt: f64,
    /// Step of the one-step integrator used for non-linear growth.
    pub ode_dt: f64,
    /// Keep labelled measures (needed by martingale diagnostics).
    pub record_measures: bool,
}

impl Default for SimulationCaps {
    fn default() -> Self {
        Self {
            n_cap: 1_000_000,
            max_events: 100_000_000,
            region_index: None,
            sde_dt: 1e-3,
            ode_dt: 1e-2,
            record_measures: true,
        }
    }
}

impl SimulationCaps {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.n_cap == 0 || self.max_events == 0 {
            return Err(ModelError::InvalidSpec("caps must be positive".into()));
        }
        if !(self.sde_dt > 0.0 && self.sde_dt.is_finite() && self.ode_dt > 0.0 && self.ode_dt.is_finite()) {
            return Err(ModelError::InvalidSpec("integration steps must be positive".into()));
        }
        Ok(())
    }
}

/// Analytic reference values attached to a model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnownTriplet {
    /// Growth factor per generation (discrete) or per unit time.
    pub lambda: Option<f64>,
    /// Growth rate `log(lambda)` for continuous time.
    pub rate: Option<f64>,
    /// Right eigenfunction up to a constant.
    pub h: Option<ScalarFn>,
    /// Density of the left eigenmeasure up to a constant.
    pub gamma_density: Option<ScalarFn>,
}

/// Motion of a trait between branching events.
#[derive(Debug, Clone, Copy)]
pub enum Motion<'a> {
    Static,
    Ode { growth: &'a ScalarFn },
    Sde { drift: &'a ScalarFn, sigma: &'a ScalarFn, lo: f64, hi: f64 },
}

impl Motion<'_> {
    /// `G V(x)`, the motion generator applied to `v`.
    pub fn generator(&self, v: &ScalarFn, x: f64) -> f64 {
        match self {
            Motion::Static => 0.0,
            Motion::Ode { growth } => growth.eval(x) * v.derivative(x),
            Motion::Sde { drift, sigma, .. } => {
                let s = sigma.eval(x);
                drift.eval(x) * v.derivative(x) + 0.5 * s * s * v.second_derivative(x)
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Motion::Static => "none",
            Motion::Ode { .. } => "ode",
            Motion::Sde { .. } => "sde",
        }
    }
}

/// One possible reproduction outcome with its probability (children traits).
pub type WeightedOutcome = (f64, Vec<f64>);

/// A continuous-time branching process with real traits.
pub trait ContinuousModel: Sync {
    /// Open trait domain `(lo, hi)`; infinite ends allowed.
    fn domain(&self) -> (f64, f64);
    fn motion(&self) -> Motion<'_>;
    /// Total branching rate `B(x)`.
    fn rate(&self, x: f64) -> f64;
    /// Sublevel set `O_m` as a closed interval; increasing in `m`.
    fn cell(&self, m: usize) -> (f64, f64);
    /// Smallest `m` with `x` in `O_m`.
    fn cell_index(&self, x: f64) -> usize;
    /// Upper bound of `B` on `O_m`.
    fn rate_bound(&self, m: usize) -> f64;
    fn sample_offspring(&self, x: f64, stream: &mut LabelStream) -> Vec<f64>;
    /// Quadrature of the offspring law at a branching event in `x`.
    fn offspring_outcomes(&self, x: f64) -> Vec<WeightedOutcome>;
    /// `B(x) sum_k k log(k) q_k(x)` with a remainder bound, `None` if the series does not settle.
    fn kloglk_rate(&self, x: f64) -> Option<(f64, f64)>;
}

fn cell_index_by<F: Fn(usize) -> (f64, f64)>(cell: F, x: f64) -> usize {
    for m in 0..4096 {
        let (a, b) = cell(m);
        if x >= a && x <= b {
            return m;
        }
    }
    usize::MAX
}

// ---------------------------------------------------------------- multitype GW

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultitypeGwSpec {
    /// Reproduction law of each type, indexed by type.
    pub laws: Vec<TypeLaw>,
}

/// Multitype Galton-Watson process on types `0..n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MultitypeGwSpec", into = "MultitypeGwSpec")]
pub struct MultitypeGw {
    spec: MultitypeGwSpec,
    samplers: Vec<TypeSampler>,
    mean: Vec<Vec<f64>>,
}

impl PartialEq for MultitypeGw {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl TryFrom<MultitypeGwSpec> for MultitypeGw {
    type Error = ModelError;

    fn try_from(spec: MultitypeGwSpec) -> Result<Self, ModelError> {
        let n = spec.laws.len();
        if n == 0 {
            return Err(ModelError::InvalidSpec("multitype-gw needs at least one type".into()));
        }
        let samplers: Vec<TypeSampler> =
            spec.laws.iter().map(|l| TypeSampler::new(l, n)).collect::<Result<_, _>>()?;
        let mean = samplers.iter().map(|s| s.mean_row(n)).collect();
        Ok(Self { spec, samplers, mean })
    }
}

impl From<MultitypeGw> for MultitypeGwSpec {
    fn from(m: MultitypeGw) -> Self {
        m.spec
    }
}

impl MultitypeGw {
    pub fn new(laws: Vec<TypeLaw>) -> Result<Self, ModelError> {
        MultitypeGwSpec { laws }.try_into()
    }

    /// Type `i` always has the children listed in `children[i]`.
    pub fn deterministic(children: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        Self::new(children.into_iter().map(TypeLaw::deterministic).collect())
    }

    /// Deterministic model whose mean matrix is the given integer matrix.
    pub fn from_integer_matrix(m: &[Vec<usize>]) -> Result<Self, ModelError> {
        Self::deterministic(
            m.iter()
                .map(|row| row.iter().enumerate().flat_map(|(j, &c)| std::iter::repeat_n(j, c)).collect())
                .collect(),
        )
    }

    /// Single-type process with `probs[k]` the probability of `k` children.
    pub fn single_type(probs: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(vec![TypeLaw::Independent { laws: vec![CountLawSpec::Probabilities { probs }] }])
    }

    pub fn n_types(&self) -> usize {
        self.mean.len()
    }

    pub fn laws(&self) -> &[TypeLaw] {
        &self.spec.laws
    }

    /// `M[i][j]`: mean number of type-`j` children of a type-`i` parent.
    pub fn mean_matrix(&self) -> &[Vec<f64>] {
        &self.mean
    }

    pub fn sample_offspring(&self, x: usize, stream: &mut LabelStream) -> Result<Vec<usize>, ModelError> {
        let s = self.samplers.get(x).ok_or(ModelError::Domain(format!("type {x}")))?;
        Ok(s.sample_children(stream))
    }

    pub(crate) fn sampler(&self, x: usize) -> &TypeSampler {
        &self.samplers[x]
    }
}

// ---------------------------------------------------------------- house of cards

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HouseOfCardsSpec {
    /// Rate `r(x)` of local reproduction events.
    pub rate: ScalarFn,
    /// Law `p_k` of the number of same-trait children at a local event.
    pub offspring: CountLawSpec,
    /// Rate of births of a child with a uniform trait (the parent survives).
    #[serde(default = "one")]
    pub immigration: f64,
}

fn one() -> f64 {
    1.0
}

/// Traits in `[0, 1]`, no motion; local events at rate `r(x)` replace the
/// parent by `k ~ p` copies, and at rate `immigration` a child with a
/// uniform trait is born next to the parent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "HouseOfCardsSpec", into = "HouseOfCardsSpec")]
pub struct HouseOfCards {
    spec: HouseOfCardsSpec,
    law: CountLaw,
    kloglk_local: Option<(f64, f64)>,
}

impl PartialEq for HouseOfCards {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl TryFrom<HouseOfCardsSpec> for HouseOfCards {
    type Error = ModelError;

    fn try_from(spec: HouseOfCardsSpec) -> Result<Self, ModelError> {
        if !(spec.immigration >= 0.0 && spec.immigration.is_finite()) {
            return Err(ModelError::InvalidSpec("immigration rate must be finite and >= 0".into()));
        }
        let law = spec.offspring.build()?;
        let kloglk_local = super::drift::kloglk_series(&spec.offspring);
        let m = Self { spec, law, kloglk_local };
        check_rate_on(&m.spec.rate, 0.0, 1.0)?;
        Ok(m)
    }
}

impl From<HouseOfCards> for HouseOfCardsSpec {
    fn from(m: HouseOfCards) -> Self {
        m.spec
    }
}

fn check_rate_on(rate: &ScalarFn, lo: f64, hi: f64) -> Result<(), ModelError> {
    for i in 0..=64 {
        let x = lo + (hi - lo) * i as f64 / 64.0;
        let b = rate.eval(x);
        if !(b >= 0.0) {
            return Err(ModelError::InvalidSpec(format!("rate {b} at x = {x} is not a nonnegative number")));
        }
    }
    Ok(())
}

impl HouseOfCards {
    pub fn new(rate: ScalarFn, offspring: CountLawSpec, immigration: f64) -> Result<Self, ModelError> {
        HouseOfCardsSpec { rate, offspring, immigration }.try_into()
    }

    /// Pure-death local events at rate `alpha(x)` plus unit-rate uniform births,
    /// so that the first-moment generator is `f -> int f - alpha f`.
    pub fn with_alpha(alpha: ScalarFn) -> Result<Self, ModelError> {
        Self::new(alpha, CountLawSpec::fixed(0), 1.0)
    }

    pub fn spec(&self) -> &HouseOfCardsSpec {
        &self.spec
    }

    pub fn law(&self) -> &CountLaw {
        &self.law
    }

    /// `alpha(x) = -r(x) sum_k (k - 1) p_k`.
    pub fn alpha(&self, x: f64) -> f64 {
        -self.spec.rate.eval(x) * self.law.mean_excess()
    }
}

impl ContinuousModel for HouseOfCards {
    fn domain(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn motion(&self) -> Motion<'_> {
        Motion::Static
    }

    fn rate(&self, x: f64) -> f64 {
        self.spec.rate.eval(x) + self.spec.immigration
    }

    fn cell(&self, _m: usize) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn cell_index(&self, _x: f64) -> usize {
        0
    }

    fn rate_bound(&self, _m: usize) -> f64 {
        self.spec.rate.sup_on(0.0, 1.0) + self.spec.immigration
    }

    fn sample_offspring(&self, x: f64, stream: &mut LabelStream) -> Vec<f64> {
        let r = self.spec.rate.eval(x);
        let total = r + self.spec.immigration;
        if stream.uniform() * total < r {
            vec![x; self.law.sample(stream)]
        } else {
            vec![x, stream.uniform()]
        }
    }

    fn offspring_outcomes(&self, x: f64) -> Vec<WeightedOutcome> {
        let r = self.spec.rate.eval(x);
        let total = r + self.spec.immigration;
        if total <= 0.0 {
            return Vec::new();
        }
        let mut out: Vec<WeightedOutcome> = self
            .law
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| (r / total * p, vec![x; k]))
            .collect();
        let (u, w) = crate::numerics::gauss_legendre_unit(32);
        for (u, w) in u.into_iter().zip(w) {
            out.push((self.spec.immigration / total * w, vec![x, u]));
        }
        out
    }

    fn kloglk_rate(&self, x: f64) -> Option<(f64, f64)> {
        let (s, rem) = self.kloglk_local?;
        let r = self.spec.rate.eval(x);
        Some((r * s + self.spec.immigration * 2.0 * 2f64.ln(), r * rem))
    }
}

// ---------------------------------------------------------------- growth-fragmentation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthFragmentationSpec {
    /// Growth speed `g(x) > 0`.
    pub growth: ScalarFn,
    /// Division rate `B(x)`.
    pub rate: ScalarFn,
    /// Law of the fraction kept by the first child.
    pub split: FragmentLaw,
}

/// Traits in `(0, inf)` growing along `x' = g(x)` and splitting at rate `B(x)`
/// into `theta x` and `(1 - theta) x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GrowthFragmentationSpec", into = "GrowthFragmentationSpec")]
pub struct GrowthFragmentation {
    spec: GrowthFragmentationSpec,
}

impl TryFrom<GrowthFragmentationSpec> for GrowthFragmentation {
    type Error = ModelError;

    fn try_from(spec: GrowthFragmentationSpec) -> Result<Self, ModelError> {
        spec.split.validate()?;
        for i in -20..=20 {
            let x = 2f64.powf(i as f64 * 0.5);
            let g = spec.growth.eval(x);
            if !(g > 0.0 && g.is_finite()) {
                return Err(ModelError::InvalidSpec(format!("growth speed {g} at x = {x} must be positive")));
            }
            let b = spec.rate.eval(x);
            if !(b >= 0.0 && b.is_finite()) {
                return Err(ModelError::InvalidSpec(format!("rate {b} at x = {x} is not a nonnegative number")));
            }
        }
        Ok(Self { spec })
    }
}

impl From<GrowthFragmentation> for GrowthFragmentationSpec {
    fn from(m: GrowthFragmentation) -> Self {
        m.spec
    }
}

impl GrowthFragmentation {
    pub fn new(growth: ScalarFn, rate: ScalarFn, split: FragmentLaw) -> Result<Self, ModelError> {
        GrowthFragmentationSpec { growth, rate, split }.try_into()
    }

    pub fn spec(&self) -> &GrowthFragmentationSpec {
        &self.spec
    }
}

impl ContinuousModel for GrowthFragmentation {
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn motion(&self) -> Motion<'_> {
        Motion::Ode { growth: &self.spec.growth }
    }

    fn rate(&self, x: f64) -> f64 {
        self.spec.rate.eval(x)
    }

    /// `O_m = (0, 2^m]`, closed at zero for bounding purposes.
    fn cell(&self, m: usize) -> (f64, f64) {
        (0.0, 2f64.powi(m as i32))
    }

    fn cell_index(&self, x: f64) -> usize {
        if x <= 1.0 {
            0
        } else {
            let m = x.log2().ceil() as usize;
            if 2f64.powi(m as i32) < x {
                m + 1
            } else {
                m
            }
        }
    }

    fn rate_bound(&self, m: usize) -> f64 {
        let (a, b) = self.cell(m);
        self.spec.rate.sup_on(a, b)
    }

    fn sample_offspring(&self, x: f64, stream: &mut LabelStream) -> Vec<f64> {
        let theta = self.spec.split.sample(stream);
        let first = theta * x;
        vec![first, x - first]
    }

    fn offspring_outcomes(&self, x: f64) -> Vec<WeightedOutcome> {
        let (t, w) = self.spec.split.quadrature(32);
        t.into_iter().zip(w).map(|(t, w)| (w, vec![t * x, x - t * x])).collect()
    }

    fn kloglk_rate(&self, x: f64) -> Option<(f64, f64)> {
        Some((self.rate(x) * 2.0 * 2f64.ln(), 0.0))
    }
}

// ---------------------------------------------------------------- branching diffusion

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchingDiffusionSpec {
    /// Domain `(lo, hi)`; traits are killed on reaching the boundary.
    pub lo: f64,
    pub hi: f64,
    pub drift: ScalarFn,
    pub sigma: ScalarFn,
    /// Branching rate `r(x)`.
    pub rate: ScalarFn,
    /// Number of children, all born at the parent's position.
    pub offspring: CountLawSpec,
}

/// One-dimensional diffusion in `(lo, hi)` absorbed at the boundary, with
/// local branching.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "BranchingDiffusionSpec", into = "BranchingDiffusionSpec")]
pub struct BranchingDiffusion {
    spec: BranchingDiffusionSpec,
    law: CountLaw,
    kloglk_local: Option<(f64, f64)>,
}

impl PartialEq for BranchingDiffusion {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}

impl TryFrom<BranchingDiffusionSpec> for BranchingDiffusion {
    type Error = ModelError;

    fn try_from(spec: BranchingDiffusionSpec) -> Result<Self, ModelError> {
        if !(spec.lo < spec.hi && spec.lo.is_finite() && spec.hi.is_finite()) {
            return Err(ModelError::InvalidSpec("diffusion domain must be a bounded interval".into()));
        }
        for i in 1..64 {
            let x = spec.lo + (spec.hi - spec.lo) * i as f64 / 64.0;
            let s = spec.sigma.eval(x);
            if !(s * s > 0.0 && s.is_finite()) {
                return Err(ModelError::InvalidSpec(format!("diffusion coefficient {s} at x = {x} is degenerate")));
            }
        }
        check_rate_on(&spec.rate, spec.lo, spec.hi)?;
        let law = spec.offspring.build()?;
        let kloglk_local = super::drift::kloglk_series(&spec.offspring);
        Ok(Self { spec, law, kloglk_local })
    }
}

impl From<BranchingDiffusion> for BranchingDiffusionSpec {
    fn from(m: BranchingDiffusion) -> Self {
        m.spec
    }
}

impl BranchingDiffusion {
    pub fn new(spec: BranchingDiffusionSpec) -> Result<Self, ModelError> {
        spec.try_into()
    }

    /// Brownian motion with diffusion coefficient `sigma` on `(lo, hi)`,
    /// branching into `k ~ offspring` at constant rate.
    pub fn brownian(lo: f64, hi: f64, sigma: f64, rate: f64, offspring: CountLawSpec) -> Result<Self, ModelError> {
        Self::new(BranchingDiffusionSpec {
            lo,
            hi,
            drift: ScalarFn::constant(0.0),
            sigma: ScalarFn::constant(sigma),
            rate: ScalarFn::constant(rate),
            offspring,
        })
    }

    pub fn spec(&self) -> &BranchingDiffusionSpec {
        &self.spec
    }

    pub fn law(&self) -> &CountLaw {
        &self.law
    }

    /// `r(x) (m - 1)`, the local growth rate of the first moment.
    pub fn local_growth(&self, x: f64) -> f64 {
        self.spec.rate.eval(x) * self.law.mean_excess()
    }

    /// `kappa(x) = rbar - r(x)(m - 1)` with `rbar` the supremum of the local growth.
    pub fn kappa(&self, probes: &[f64]) -> Vec<f64> {
        let rbar = self.rbar();
        probes.iter().map(|&x| rbar - self.local_growth(x)).collect()
    }

    /// Upper bound of `r(x)(m - 1)` over the domain.
    pub fn rbar(&self) -> f64 {
        let excess = self.law.mean_excess();
        let (lo, hi) = (self.spec.lo, self.spec.hi);
        if excess >= 0.0 {
            self.spec.rate.sup_on(lo, hi) * excess
        } else {
            (0..=1024)
                .map(|i| self.local_growth(lo + (hi - lo) * i as f64 / 1024.0))
                .fold(f64::NEG_INFINITY, f64::max)
        }
    }
}

impl ContinuousModel for BranchingDiffusion {
    fn domain(&self) -> (f64, f64) {
        (self.spec.lo, self.spec.hi)
    }

    fn motion(&self) -> Motion<'_> {
        Motion::Sde { drift: &self.spec.drift, sigma: &self.spec.sigma, lo: self.spec.lo, hi: self.spec.hi }
    }

    fn rate(&self, x: f64) -> f64 {
        self.spec.rate.eval(x)
    }

    /// Points at distance at least `w 2^-(m+2)` from the boundary.
    fn cell(&self, m: usize) -> (f64, f64) {
        let d = (self.spec.hi - self.spec.lo) * 0.5f64.powi(m as i32 + 2);
        (self.spec.lo + d, self.spec.hi - d)
    }

    fn cell_index(&self, x: f64) -> usize {
        cell_index_by(|m| self.cell(m), x)
    }

    fn rate_bound(&self, m: usize) -> f64 {
        let (a, b) = self.cell(m);
        self.spec.rate.sup_on(a, b)
    }

    fn sample_offspring(&self, x: f64, stream: &mut LabelStream) -> Vec<f64> {
        vec![x; self.law.sample(stream)]
    }

    fn offspring_outcomes(&self, x: f64) -> Vec<WeightedOutcome> {
        self.law
            .probs()
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| (*p, vec![x; k]))
            .collect()
    }

    fn kloglk_rate(&self, x: f64) -> Option<(f64, f64)> {
        let (s, rem) = self.kloglk_local?;
        let r = self.rate(x);
        Some((r * s, r * rem))
    }
}

// ---------------------------------------------------------------- model documents

/// The catalogue of supported model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelFamily {
    MultitypeGw(MultitypeGw),
    HouseOfCards(HouseOfCards),
    GrowthFragmentation(GrowthFragmentation),
    BranchingDiffusion(BranchingDiffusion),
}

/// One branching model: family parameters, simulation caps and optional
/// analytic reference values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub name: String,
    pub family: ModelFamily,
    #[serde(default)]
    pub caps: SimulationCaps,
    #[serde(default)]
    pub known_triplet: Option<KnownTriplet>,
}

impl ModelSpec {
    pub fn new(family: ModelFamily) -> Self {
        Self { name: String::new(), family, caps: SimulationCaps::default(), known_triplet: None }
    }

    pub fn time_mode(&self) -> TimeMode {
        match self.family {
            ModelFamily::MultitypeGw(_) => TimeMode::Discrete,
            _ => TimeMode::Continuous,
        }
    }

    pub fn continuous(&self) -> Option<&dyn ContinuousModel> {
        match &self.family {
            ModelFamily::MultitypeGw(_) => None,
            ModelFamily::HouseOfCards(m) => Some(m),
            ModelFamily::GrowthFragmentation(m) => Some(m),
            ModelFamily::BranchingDiffusion(m) => Some(m),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.family {
            ModelFamily::MultitypeGw(_) => "multitype-gw",
            ModelFamily::HouseOfCards(_) => "house-of-cards",
            ModelFamily::GrowthFragmentation(_) => "growth-fragmentation",
            ModelFamily::BranchingDiffusion(_) => "branching-diffusion",
        }
    }

    /// Checks caps and local boundedness of the rate on the first sublevel sets.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.caps.validate()?;
        if let Some(m) = self.continuous() {
            for k in 0..8 {
                let b = m.rate_bound(k);
                if !(b.is_finite() && b >= 0.0) {
                    let (lo, hi) = m.cell(k);
                    return Err(ModelError::RateUnbounded { cell: k, lo, hi });
                }
            }
        }
        Ok(())
    }
}
