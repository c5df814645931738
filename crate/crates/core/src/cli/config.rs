use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::models::{ModelSpec, ScalarFn};
use crate::semigroup::{Grid, Step};
use crate::Error;

/// One experiment: a model, its discretisation and what to run on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Path of a model document, relative to the config file.
    #[serde(default)]
    pub model_file: Option<PathBuf>,
    /// Inline model document; exactly one of `model` and `model_file`.
    #[serde(default)]
    pub model: Option<ModelSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Initial type (discrete) or trait (continuous) of the founder.
    #[serde(default)]
    pub initial: f64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub step: StepConfig,
    #[serde(default = "default_functionals")]
    pub functionals: Vec<FunctionalConfig>,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

fn default_replicates() -> usize {
    100
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_functionals() -> Vec<FunctionalConfig> {
    vec![FunctionalConfig { name: "h".into(), kind: FunctionalKind::H, lo: None, hi: None, points: None, values: None }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Number of nodes for continuous traits.
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 200 }
    }
}

/// Step of the operator: `generations` for discrete models, `time` for
/// continuous ones. Without `generations` the block length is selected from
/// the contraction profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub generations: Option<u32>,
    pub time: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    /// The harmonic function of the triplet.
    H,
    Identity,
    /// `1{lo <= x <= hi}`.
    Indicator,
    PiecewiseLinear,
    /// One value per type.
    Values,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub name: String,
    pub kind: FunctionalKind,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    #[serde(default)]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

/// A validated functional, evaluable at a trait.
#[derive(Debug, Clone, PartialEq)]
pub enum Functional {
    H,
    Fn(ScalarFn),
    Indicator(f64, f64),
    Values(Vec<f64>),
}

impl FunctionalConfig {
    pub fn build(&self) -> Result<Functional, Error> {
        let bad = |what: &str| Error::Config(format!("functional `{}`: {what}", self.name));
        Ok(match self.kind {
            FunctionalKind::H => Functional::H,
            FunctionalKind::Identity => Functional::Fn(ScalarFn::identity()),
            FunctionalKind::Indicator => match (self.lo, self.hi) {
                (Some(lo), Some(hi)) if lo <= hi => Functional::Indicator(lo, hi),
                _ => return Err(bad("indicator needs lo <= hi")),
            },
            FunctionalKind::PiecewiseLinear => match &self.points {
                Some(p) if !p.is_empty() && p.windows(2).all(|w| w[0][0] < w[1][0]) => {
                    Functional::Fn(ScalarFn::PiecewiseLinear { points: p.clone() })
                }
                _ => return Err(bad("piecewise-linear needs points with increasing abscissae")),
            },
            FunctionalKind::Values => match &self.values {
                Some(v) if !v.is_empty() => Functional::Values(v.clone()),
                _ => return Err(bad("values must be non-empty")),
            },
        })
    }
}

impl Functional {
    /// Value at `x`; `h` is the interpolated harmonic function.
    pub fn eval(&self, x: f64, h: &dyn Fn(f64) -> f64) -> f64 {
        match self {
            Functional::H => h(x),
            Functional::Fn(f) => f.eval(x),
            Functional::Indicator(lo, hi) => f64::from(u8::from(x >= *lo && x <= *hi)),
            Functional::Values(v) => v.get(x as usize).copied().unwrap_or(0.0),
        }
    }

    /// Nodal values on a grid with harmonic function `h`.
    pub fn on_grid(&self, grid: &Grid, h: &[f64]) -> Vec<f64> {
        match self {
            Functional::H => h.to_vec(),
            _ => grid.nodes().iter().map(|&x| self.eval(x, &|_| 0.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub martingale: bool,
    pub llogl: bool,
    pub contraction: bool,
    pub verdicts: bool,
    /// Discrete horizon in blocks of the step.
    pub blocks: usize,
    /// Continuous horizon.
    pub horizon: f64,
    /// Number of snapshot intervals on `[0, horizon]` (continuous).
    pub snapshots: usize,
    /// Probe types or traits for `I_n`; defaults to every type or to the founder.
    pub probes: Option<Vec<f64>>,
    /// Steps (generations or times) at which `I_n` is estimated.
    pub llogl_steps: Vec<f64>,
    pub llogl_replicates: Option<usize>,
    /// Truncation weight `V` per type; ones by default.
    pub v: Option<Vec<f64>>,
    /// Exponent `p` of `V* = 1 + x^p` for continuous traits.
    pub vstar_p: f64,
    pub profile_n: usize,
    pub r_max: usize,
    pub r_threshold: f64,
    pub z: f64,
    pub alpha: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            martingale: true,
            llogl: true,
            contraction: true,
            verdicts: true,
            blocks: 10,
            horizon: 2.0,
            snapshots: 20,
            probes: None,
            llogl_steps: vec![1.0, 2.0, 3.0, 4.0],
            llogl_replicates: None,
            v: None,
            vstar_p: 2.0,
            profile_n: 20,
            r_max: 10,
            r_threshold: 0.9,
            z: 3.0,
            alpha: 0.05,
        }
    }
}

/// Configuration with its model resolved and checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub spec: ModelSpec,
    pub functionals: Vec<(String, Functional)>,
}

impl ExperimentConfig {
    /// Parses a TOML document; errors carry line and column.
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Experiment, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let config = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        config.resolve(path.parent().unwrap_or(Path::new(".")))
    }

    /// Loads `model_file` relative to `base` and validates everything.
    pub fn resolve(self, base: &Path) -> Result<Experiment, Error> {
        let spec = match (&self.model, &self.model_file) {
            (Some(m), None) => m.clone(),
            (None, Some(f)) => {
                let p = base.join(f);
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| Error::Config(format!("cannot read model {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            _ => return Err(Error::Config("exactly one of `model` and `model_file` is required".into())),
        };
        spec.validate().map_err(|e| Error::Config(format!("model: {e}")))?;
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be positive".into()));
        }
        if let Some(t) = self.step.time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("step.time = {t} must be positive")));
            }
        }
        if self.step.generations == Some(0) {
            return Err(Error::Config("step.generations must be positive".into()));
        }
        let functionals = self
            .functionals
            .iter()
            .map(|f| f.build().map(|b| (f.name.clone(), b)))
            .collect::<Result<Vec<_>, _>>()?;
        if let crate::models::ModelFamily::MultitypeGw(m) = &spec.family {
            let x = self.initial;
            if x < 0.0 || x.fract() != 0.0 || x as usize >= m.n_types() {
                return Err(Error::Config(format!("initial = {x} is not a type")));
            }
        }
        Ok(Experiment { config: self, spec, functionals })
    }
}

impl Experiment {
    pub fn step(&self) -> Option<Step> {
        match (self.config.step.generations, self.config.step.time) {
            (Some(r), _) => Some(Step::Generations(r)),
            (None, Some(t)) => Some(Step::Time(t)),
            _ => None,
        }
    }
}
