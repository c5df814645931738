use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::genealogy::LabelStream;
use crate::numerics::{csum, gauss_legendre_unit};

/// Default truncation of offspring counts.
pub const DEFAULT_K_MAX: usize = 1 << 20;

const MASS_TOL: f64 = 1e-12;
const TAIL_TOL: f64 = 1e-16;

/// Declarative law of the number of children born at one branching event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CountLawSpec {
    /// `probs[k]` is the probability of `k` children.
    Probabilities { probs: Vec<f64> },
    /// `q_k = (1 - s) s^(k-1)` for `k >= 1`.
    Geometric { s: f64 },
    Poisson { mean: f64 },
}

impl CountLawSpec {
    pub fn fixed(k: usize) -> Self {
        let mut probs = vec![0.0; k + 1];
        probs[k] = 1.0;
        CountLawSpec::Probabilities { probs }
    }

    pub fn build(&self) -> Result<CountLaw, ModelError> {
        self.build_with(DEFAULT_K_MAX)
    }

    /// Probability vector truncated at `k_max`, tail mass folded into the last index.
    pub fn build_with(&self, k_max: usize) -> Result<CountLaw, ModelError> {
        let (mut probs, tail_mass) = match self {
            CountLawSpec::Probabilities { probs } => {
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(ModelError::InvalidLaw("negative or non-finite probability".into()));
                }
                let total = csum(probs.iter().copied());
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(ModelError::InvalidLaw(format!(
                        "probabilities sum to {total}, not 1"
                    )));
                }
                if probs.len() > k_max + 1 {
                    let tail = csum(probs[k_max + 1..].iter().copied());
                    let mut head = probs[..=k_max].to_vec();
                    head[k_max] += tail;
                    (head, tail)
                } else {
                    (probs.clone(), 0.0)
                }
            }
            CountLawSpec::Geometric { s } => {
                if !(0.0..1.0).contains(s) {
                    return Err(ModelError::InvalidLaw(format!("geometric parameter {s} outside [0,1)")));
                }
                series(k_max, |k| if k == 0 { 0.0 } else { (1.0 - s) * s.powi(k as i32 - 1) })
            }
            CountLawSpec::Poisson { mean } => {
                if !(mean.is_finite() && *mean >= 0.0) {
                    return Err(ModelError::InvalidLaw(format!("poisson mean {mean} invalid")));
                }
                let mut log_fact = 0.0;
                series(k_max, |k| {
                    if k > 0 {
                        log_fact += (k as f64).ln();
                    }
                    if *mean == 0.0 {
                        if k == 0 { 1.0 } else { 0.0 }
                    } else {
                        (k as f64 * mean.ln() - mean - log_fact).exp()
                    }
                })
            }
        };
        while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
            probs.pop();
        }
        Ok(CountLaw::from_probs(probs, tail_mass))
    }
}

fn series(k_max: usize, mut term: impl FnMut(usize) -> f64) -> (Vec<f64>, f64) {
    let mut probs = Vec::new();
    let mut acc = 0.0;
    for k in 0..=k_max {
        let t = term(k);
        probs.push(t);
        acc += t;
        if k > 0 && 1.0 - acc < TAIL_TOL && t < TAIL_TOL {
            break;
        }
    }
    let tail = (1.0 - csum(probs.iter().copied())).max(0.0);
    let last = probs.len() - 1;
    probs[last] += tail;
    (probs, tail)
}

/// Materialised count law.
#[derive(Debug, Clone, PartialEq)]
pub struct CountLaw {
    probs: Vec<f64>,
    cdf: Vec<f64>,
    tail_mass: f64,
}

impl CountLaw {
    fn from_probs(probs: Vec<f64>, tail_mass: f64) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { probs, cdf, tail_mass }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability mass moved onto the last index by truncation.
    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn max_count(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn mean(&self) -> f64 {
        csum(self.probs.iter().enumerate().map(|(k, p)| k as f64 * p))
    }

    /// `sum_k (k - 1) q_k`.
    pub fn mean_excess(&self) -> f64 {
        self.mean() - 1.0
    }

    pub fn sample(&self, stream: &mut LabelStream) -> usize {
        let u = stream.uniform();
        let i = self.cdf.partition_point(|c| *c < u);
        i.min(self.probs.len() - 1)
    }
}

/// Law of the fraction `theta` kept by the first child at a binary split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FragmentLaw {
    Uniform,
    /// Beta law with `a, b >= 1`.
    Beta { a: f64, b: f64 },
    Fixed { theta: f64 },
}

impl FragmentLaw {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            FragmentLaw::Uniform => Ok(()),
            FragmentLaw::Beta { a, b } if *a >= 1.0 && *b >= 1.0 => Ok(()),
            FragmentLaw::Beta { a, b } => {
                Err(ModelError::InvalidLaw(format!("beta({a},{b}) needs a,b >= 1")))
            }
            FragmentLaw::Fixed { theta } if *theta > 0.0 && *theta < 1.0 => Ok(()),
            FragmentLaw::Fixed { theta } => {
                Err(ModelError::InvalidLaw(format!("split fraction {theta} outside (0,1)")))
            }
        }
    }

    pub fn sample(&self, stream: &mut LabelStream) -> f64 {
        match self {
            FragmentLaw::Uniform => stream.uniform(),
            FragmentLaw::Beta { a, b } => {
                let d = rand_distr::Beta::new(*a, *b).expect("validated beta parameters");
                d.sample(stream).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
            }
            FragmentLaw::Fixed { theta } => *theta,
        }
    }

    /// Quadrature `(theta_j, w_j)` for integrals against the law.
    pub fn quadrature(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            FragmentLaw::Uniform => gauss_legendre_unit(n),
            FragmentLaw::Beta { a, b } => {
                let (x, w) = gauss_legendre_unit(n);
                let dens: Vec<f64> = x
                    .iter()
                    .zip(&w)
                    .map(|(t, w)| w * t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0))
                    .collect();
                let z = csum(dens.iter().copied());
                (x, dens.into_iter().map(|d| d / z).collect())
            }
            FragmentLaw::Fixed { theta } => (vec![*theta], vec![1.0]),
        }
    }

    /// `alpha_p = 1 - E[theta^p + (1 - theta)^p]`.
    pub fn alpha(&self, p: f64) -> f64 {
        let (x, w) = self.quadrature(64);
        1.0 - csum(x.iter().zip(&w).map(|(t, w)| w * (t.powf(p) + (1.0 - t).powf(p))))
    }
}

/// Outcome of a multitype reproduction: ordered child types with a probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outcome {
    pub prob: f64,
    pub children: Vec<usize>,
}

/// Reproduction law of one type in a multitype Galton-Watson process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TypeLaw {
    /// Finite joint law over ordered lists of child types.
    Outcomes { outcomes: Vec<Outcome> },
    /// Independent Poisson numbers of children of each type.
    Poisson { means: Vec<f64> },
    /// Independent per-type count laws; children listed type by type.
    Independent { laws: Vec<CountLawSpec> },
}

impl TypeLaw {
    pub fn deterministic(children: Vec<usize>) -> Self {
        TypeLaw::Outcomes { outcomes: vec![Outcome { prob: 1.0, children }] }
    }
}

/// Validated multitype reproduction law ready for sampling.
#[derive(Debug, Clone)]
pub(crate) enum TypeSampler {
    Outcomes { cdf: Vec<f64>, children: Vec<Vec<usize>> },
    Poisson { means: Vec<f64> },
    Independent { laws: Vec<CountLaw> },
}

impl TypeSampler {
    pub(crate) fn new(law: &TypeLaw, n_types: usize) -> Result<Self, ModelError> {
        match law {
            TypeLaw::Outcomes { outcomes } => {
                let total = csum(outcomes.iter().map(|o| o.prob));
                if outcomes.iter().any(|o| !(o.prob >= 0.0)) || (total - 1.0).abs() > MASS_TOL {
                    return Err(ModelError::InvalidLaw(format!(
                        "outcome probabilities sum to {total}, not 1"
                    )));
                }
                if let Some(t) = outcomes.iter().flat_map(|o| &o.children).find(|&&t| t >= n_types) {
                    return Err(ModelError::InvalidLaw(format!("child type {t} out of range")));
                }
                let mut acc = 0.0;
                let cdf = outcomes
                    .iter()
                    .map(|o| {
                        acc += o.prob;
                        acc
                    })
                    .collect();
                Ok(TypeSampler::Outcomes {
                    cdf,
                    children: outcomes.iter().map(|o| o.children.clone()).collect(),
                })
            }
            TypeLaw::Poisson { means } => {
                if means.len() != n_types || means.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
                    return Err(ModelError::InvalidLaw("poisson means: wrong length or invalid".into()));
                }
                Ok(TypeSampler::Poisson { means: means.clone() })
            }
            TypeLaw::Independent { laws } => {
                if laws.len() != n_types {
                    return Err(ModelError::InvalidLaw("independent laws: one per type expected".into()));
                }
                Ok(TypeSampler::Independent {
                    laws: laws.iter().map(|l| l.build()).collect::<Result<_, _>>()?,
                })
            }
        }
    }

    pub(crate) fn mean_row(&self, n_types: usize) -> Vec<f64> {
        let mut row = vec![0.0; n_types];
        match self {
            TypeSampler::Outcomes { cdf, children } => {
                let mut prev = 0.0;
                for (c, kids) in cdf.iter().zip(children) {
                    let p = c - prev;
                    prev = *c;
                    for &t in kids {
                        row[t] += p;
                    }
                }
            }
            TypeSampler::Poisson { means } => row.copy_from_slice(means),
            TypeSampler::Independent { laws } => {
                for (r, l) in row.iter_mut().zip(laws) {
                    *r = l.mean();
                }
            }
        }
        row
    }

    /// Per-type child counts.
    pub(crate) fn sample_counts(&self, stream: &mut LabelStream, out: &mut [u64]) {
        out.iter_mut().for_each(|c| *c = 0);
        match self {
            TypeSampler::Outcomes { cdf, children } => {
                let u = stream.uniform();
                let i = cdf.partition_point(|c| *c < u).min(children.len() - 1);
                for &t in &children[i] {
                    out[t] += 1;
                }
            }
            TypeSampler::Poisson { means } => {
                for (c, m) in out.iter_mut().zip(means) {
                    *c = if *m > 0.0 {
                        let d = Poisson::new(*m).expect("validated mean");
                        (d.sample(stream) as u64).min(DEFAULT_K_MAX as u64)
                    } else {
                        0
                    };
                }
            }
            TypeSampler::Independent { laws } => {
                for (c, l) in out.iter_mut().zip(laws) {
                    *c = l.sample(stream) as u64;
                }
            }
        }
    }

    pub(crate) fn sample_children(&self, stream: &mut LabelStream) -> Vec<usize> {
        match self {
            TypeSampler::Outcomes { cdf, children } => {
                let u = stream.uniform();
                let i = cdf.partition_point(|c| *c < u).min(children.len() - 1);
                children[i].clone()
            }
            _ => {
                let n = match self {
                    TypeSampler::Poisson { means } => means.len(),
                    TypeSampler::Independent { laws } => laws.len(),
                    TypeSampler::Outcomes { .. } => unreachable!(),
                };
                let mut counts = vec![0u64; n];
                self.sample_counts(stream, &mut counts);
                counts
                    .iter()
                    .enumerate()
                    .flat_map(|(t, &c)| std::iter::repeat_n(t, c as usize))
                    .collect()
            }
        }
    }

    /// Total child counts of `n` independent parents of this type.
    pub(crate) fn sample_counts_many(&self, n: u64, stream: &mut LabelStream, out: &mut [u64]) {
        out.iter_mut().for_each(|c| *c = 0);
        if n == 0 {
            return;
        }
        match self {
            TypeSampler::Outcomes { cdf, children } => {
                // multinomial over outcomes via sequential binomials
                let mut left = n;
                let mut mass_left = 1.0;
                let mut prev = 0.0;
                for (i, c) in cdf.iter().enumerate() {
                    let p = c - prev;
                    prev = *c;
                    if left == 0 {
                        break;
                    }
                    let draw = if i + 1 == cdf.len() || mass_left <= p {
                        left
                    } else if p <= 0.0 {
                        0
                    } else {
                        Binomial::new(left, (p / mass_left).min(1.0)).expect("valid binomial").sample(stream)
                    };
                    mass_left -= p;
                    left -= draw;
                    for &t in &children[i] {
                        out[t] += draw;
                    }
                }
            }
            TypeSampler::Poisson { means } => {
                for (c, m) in out.iter_mut().zip(means) {
                    let mean = m * n as f64;
                    *c = if mean > 0.0 { Poisson::new(mean).expect("valid").sample(stream) as u64 } else { 0 };
                }
            }
            TypeSampler::Independent { laws } => {
                for (c, l) in out.iter_mut().zip(laws) {
                    let p = l.probs();
                    let mut left = n;
                    let mut mass_left = 1.0;
                    for (k, pk) in p.iter().enumerate() {
                        if left == 0 {
                            break;
                        }
                        let draw = if k + 1 == p.len() || mass_left <= *pk {
                            left
                        } else if *pk <= 0.0 {
                            0
                        } else {
                            Binomial::new(left, (pk / mass_left).min(1.0)).expect("valid").sample(stream)
                        };
                        mass_left -= pk;
                        left -= draw;
                        *c += draw * k as u64;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genealogy::{stream_for, UlamLabel};

    #[test]
    fn probabilities_validate() {
        assert!(CountLawSpec::Probabilities { probs: vec![0.5, 0.4] }.build().is_err());
        assert!(CountLawSpec::Probabilities { probs: vec![0.5, -0.1, 0.6] }.build().is_err());
        let l = CountLawSpec::Probabilities { probs: vec![0.4, 0.0, 0.6] }.build().unwrap();
        assert!((l.mean() - 1.2).abs() < 1e-15);
    }

    #[test]
    fn geometric_law_moments() {
        let l = CountLawSpec::Geometric { s: 0.5 }.build().unwrap();
        assert!((csum(l.probs().iter().copied()) - 1.0).abs() < 1e-12);
        assert!((l.mean() - 2.0).abs() < 1e-10);
        assert!(l.tail_mass() < 1e-15);
    }

    #[test]
    fn truncation_folds_tail() {
        let l = CountLawSpec::Geometric { s: 0.9 }.build_with(10).unwrap();
        assert_eq!(l.max_count(), 10);
        assert!((l.tail_mass() - 0.9f64.powi(10)).abs() < 1e-12);
        assert!((csum(l.probs().iter().copied()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poisson_mean() {
        let l = CountLawSpec::Poisson { mean: 3.0 }.build().unwrap();
        assert!((l.mean() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn sampling_frequencies() {
        let l = CountLawSpec::Probabilities { probs: vec![0.25, 0.25, 0.5] }.build().unwrap();
        let mut s = stream_for(3, &UlamLabel::root());
        let n = 40_000;
        let twos = (0..n).filter(|_| l.sample(&mut s) == 2).count() as f64 / n as f64;
        assert!((twos - 0.5).abs() < 0.01);
    }

    #[test]
    fn alpha_two_uniform() {
        assert!((FragmentLaw::Uniform.alpha(2.0) - 1.0 / 3.0).abs() < 1e-14);
        assert!((FragmentLaw::Fixed { theta: 0.5 }.alpha(2.0) - 0.5).abs() < 1e-15);
        let (_, w) = FragmentLaw::Beta { a: 2.0, b: 3.0 }.quadrature(32);
        assert!((csum(w) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bulk_counts_match_mean() {
        let law = TypeLaw::Outcomes {
            outcomes: vec![
                Outcome { prob: 0.4, children: vec![] },
                Outcome { prob: 0.6, children: vec![0, 0] },
            ],
        };
        let s = TypeSampler::new(&law, 1).unwrap();
        let mut st = stream_for(9, &UlamLabel::root());
        let mut out = [0u64];
        let mut total = 0u64;
        for _ in 0..200 {
            s.sample_counts_many(1000, &mut st, &mut out);
            total += out[0];
        }
        let mean = total as f64 / 200_000.0;
        assert!((mean - 1.2).abs() < 0.01, "{mean}");
    }
}
