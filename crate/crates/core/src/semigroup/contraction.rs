use nalgebra::DMatrix;
use serde::Serialize;

use super::{EigenTriplet, MatrixOperator, SemigroupError};
use crate::numerics::{csum, linear_fit};

/// Profile values below this fraction of `a_1` are treated as roundoff and
/// left out of the regime fits.
const FIT_FLOOR: f64 = 1e-13;

/// `T f = lambda^{-1} K f - gamma(f) h`.
pub fn apply_t(op: &MatrixOperator, triplet: &EigenTriplet, f: &[f64]) -> Vec<f64> {
    let gf = triplet.gamma_of(f);
    op.apply(f).iter().zip(&triplet.h).map(|(kf, h)| kf / triplet.lambda - gf * h).collect()
}

/// `max_i |f_i| / V*_i`.
pub fn weighted_norm(f: &[f64], vstar: &[f64]) -> f64 {
    f.iter().zip(vstar).map(|(a, v)| a.abs() / v).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Geometric,
    Polynomial,
    Logarithmic,
    None,
}

/// `a_n ~ c eta^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricFit {
    pub eta: f64,
    pub c: f64,
    pub rss: f64,
}

/// `a_n ~ c n^exponent` with `exponent = 1 - q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolynomialFit {
    pub exponent: f64,
    pub q: f64,
    pub c: f64,
    pub rss: f64,
}

/// `a_n ~ c (log n)^{-s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogarithmicFit {
    pub s: f64,
    pub c: f64,
    pub rss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeFits {
    pub geometric: Option<GeometricFit>,
    pub polynomial: Option<PolynomialFit>,
    pub logarithmic: Option<LogarithmicFit>,
    /// Smallest residual sum of squares in `log a_n` among the three.
    pub best: Regime,
}

impl RegimeFits {
    /// Least-squares fits of `log a_n` over `n >= 2`, skipping values at the
    /// roundoff floor.
    pub fn fit(a: &[f64], first_n: usize) -> Self {
        let a1 = a.first().copied().unwrap_or(0.0);
        let floor = FIT_FLOOR * a1.abs().max(f64::MIN_POSITIVE);
        let points: Vec<(f64, f64)> = a
            .iter()
            .enumerate()
            .map(|(i, v)| ((first_n + i) as f64, *v))
            .filter(|(n, v)| *n >= 2.0 && v.is_finite() && *v > floor)
            .collect();
        if points.len() < 3 {
            return Self { geometric: None, polynomial: None, logarithmic: None, best: Regime::None };
        }
        let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
        let xs = |f: fn(f64) -> f64| points.iter().map(|p| f(p.0)).collect::<Vec<_>>();
        let geometric = linear_fit(&xs(|n| n), &ys)
            .map(|l| GeometricFit { eta: l.slope.exp(), c: l.intercept.exp(), rss: l.rss });
        let polynomial = linear_fit(&xs(f64::ln), &ys)
            .map(|l| PolynomialFit { exponent: l.slope, q: 1.0 - l.slope, c: l.intercept.exp(), rss: l.rss });
        let logarithmic = linear_fit(&xs(|n| n.ln().ln()), &ys)
            .map(|l| LogarithmicFit { s: -l.slope, c: l.intercept.exp(), rss: l.rss });
        let mut best = Regime::None;
        let mut best_rss = f64::INFINITY;
        for (regime, rss) in [
            (Regime::Geometric, geometric.map(|f| f.rss)),
            (Regime::Polynomial, polynomial.map(|f| f.rss)),
            (Regime::Logarithmic, logarithmic.map(|f| f.rss)),
        ] {
            if let Some(r) = rss {
                if r < best_rss {
                    best_rss = r;
                    best = regime;
                }
            }
        }
        Self { geometric, polynomial, logarithmic, best }
    }
}

/// Contraction profile `a_0, ..., a_{n_max}` with its regime fits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionProfile {
    /// `a[n]` is `a_n`; `a[0]` is `NaN` when the profile was built from
    /// values starting at `n = 1`.
    pub a: Vec<f64>,
    pub vstar: Vec<f64>,
    /// Row subset the supremum was taken over; all nodes when `None`.
    pub rows: Option<Vec<usize>>,
    pub fits: RegimeFits,
}

impl ContractionProfile {
    /// Profile from values `a_1, a_2, ...`.
    pub fn from_values(values: Vec<f64>) -> Self {
        let fits = RegimeFits::fit(&values, 1);
        let mut a = Vec::with_capacity(values.len() + 1);
        a.push(f64::NAN);
        a.extend(values);
        Self { a, vstar: Vec::new(), rows: None, fits }
    }

    pub fn n_max(&self) -> usize {
        self.a.len() - 1
    }

    /// `sum_{k=1}^{n_max} a_k / k`.
    pub fn partial_sum(&self) -> f64 {
        csum(self.a.iter().enumerate().skip(1).map(|(k, a)| a / k as f64))
    }
}

/// `a_n = max_x sum_y |lambda^{-n} K^n(x, y) - h(x) gamma_y| V*(y) / V*(x)`
/// for `n = 0..=n_max`, the supremum over `x` restricted to `rows` if given.
/// Uses `lambda^{-n} K^n - h gamma = (lambda^{-1} K - h gamma)^n`.
pub fn contraction_profile(
    op: &MatrixOperator,
    triplet: &EigenTriplet,
    vstar: &[f64],
    n_max: usize,
    rows: Option<&[usize]>,
) -> Result<ContractionProfile, SemigroupError> {
    if n_max < 3 {
        return Err(SemigroupError::InsufficientData(format!("n_max = {n_max}, need at least 3")));
    }
    let n = op.len();
    if vstar.len() != n || triplet.h.len() != n {
        return Err(SemigroupError::Shape("weight or triplet does not match the grid".into()));
    }
    if vstar.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(SemigroupError::Shape("V* must be positive and finite on the grid".into()));
    }
    let all: Vec<usize> = (0..n).collect();
    let rows: Vec<usize> = rows.map(|r| r.to_vec()).unwrap_or(all);
    if rows.is_empty() || rows.iter().any(|&i| i >= n) {
        return Err(SemigroupError::Shape("row subset is empty or out of range".into()));
    }
    let h = &triplet.h;
    let g = &triplet.gamma;
    let t = DMatrix::from_fn(n, n, |i, j| op.matrix()[(i, j)] / triplet.lambda - h[i] * g[j]);
    let mut d = DMatrix::from_fn(rows.len(), n, |r, j| {
        let i = rows[r];
        (if i == j { 1.0 } else { 0.0 }) - h[i] * g[j]
    });
    let measure = |d: &DMatrix<f64>| {
        (0..rows.len())
            .map(|r| csum((0..n).map(|j| d[(r, j)].abs() * vstar[j])) / vstar[rows[r]])
            .fold(0.0, f64::max)
    };
    let mut a = Vec::with_capacity(n_max + 1);
    a.push(measure(&d));
    for _ in 0..n_max {
        d = &d * &t;
        a.push(measure(&d));
    }
    let fits = RegimeFits::fit(&a[1..], 1);
    let keep_rows = (rows.len() != n).then_some(rows);
    Ok(ContractionProfile { a, vstar: vstar.to_vec(), rows: keep_rows, fits })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesVerdict {
    Summable,
    NonSummable,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub verdict: SeriesVerdict,
    pub regime: Regime,
    pub partial_sum: f64,
    /// Bound on `sum_{k > n_max} a_k / k` under the fitted regime.
    pub tail_bound: Option<f64>,
}

/// Verdict on `sum_k a_k / k` from the best regime fit.
pub fn series_check(profile: &ContractionProfile) -> SeriesCheck {
    let n = profile.n_max() as f64;
    let partial_sum = profile.partial_sum();
    let fits = &profile.fits;
    let (verdict, tail_bound) = match fits.best {
        Regime::Geometric => {
            let f = fits.geometric.expect("best fit present");
            if f.eta < 1.0 {
                (SeriesVerdict::Summable, Some(f.c * f.eta.powf(n + 1.0) / ((n + 1.0) * (1.0 - f.eta))))
            } else {
                (SeriesVerdict::Inconclusive, None)
            }
        }
        Regime::Polynomial => {
            let f = fits.polynomial.expect("best fit present");
            if f.exponent < 0.0 {
                (SeriesVerdict::Summable, Some(f.c * n.powf(f.exponent) / -f.exponent))
            } else {
                (SeriesVerdict::NonSummable, None)
            }
        }
        Regime::Logarithmic => {
            let f = fits.logarithmic.expect("best fit present");
            if f.s > 1.0 {
                (SeriesVerdict::Summable, Some(f.c * n.ln().powf(1.0 - f.s) / (f.s - 1.0)))
            } else {
                (SeriesVerdict::NonSummable, None)
            }
        }
        Regime::None => (SeriesVerdict::Inconclusive, None),
    };
    SeriesCheck { verdict, regime: fits.best, partial_sum, tail_bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::{eigen_triplet, EigenOptions};

    fn two_type() -> (MatrixOperator, EigenTriplet) {
        let op = MatrixOperator::from_mean_matrix(&[vec![1.0, 2.0], vec![1.0, 0.0]], 1).unwrap();
        let t = eigen_triplet(&op, EigenOptions::default()).unwrap();
        (op, t)
    }

    #[test]
    fn t_annihilates_h_and_gamma() {
        let (op, t) = two_type();
        assert!(apply_t(&op, &t, &t.h).iter().all(|v| v.abs() < 1e-10));
        let tf = apply_t(&op, &t, &[0.3, -2.0]);
        assert!(t.gamma_of(&tf).abs() < 1e-10);
    }

    #[test]
    fn weighted_norm_basics() {
        let v = [1.0, 2.0, 4.0];
        assert_eq!(weighted_norm(&v, &v), 1.0);
        assert_eq!(weighted_norm(&[0.0; 3], &v), 0.0);
    }

    #[test]
    fn geometric_profile_of_two_type_model() {
        let (op, t) = two_type();
        let p = contraction_profile(&op, &t, &[1.0, 1.0], 30, None).unwrap();
        assert_eq!(p.fits.best, Regime::Geometric);
        let eta = p.fits.geometric.unwrap().eta;
        assert!((eta - 0.5).abs() < 0.01 * 0.5, "eta {eta}");
        // a_0 = max_x sum_y |delta_xy - h(x) gamma_y|.
        let a0 = (0..2)
            .map(|x| (0..2).map(|y| ((x == y) as u8 as f64 - t.h[x] * t.gamma[y]).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        assert!((p.a[0] - a0).abs() < 1e-12);
        let s = series_check(&p);
        assert_eq!(s.verdict, SeriesVerdict::Summable);
        assert!(s.tail_bound.unwrap() < 1e-9);
    }

    #[test]
    fn short_profiles_are_rejected() {
        let (op, t) = two_type();
        assert!(matches!(
            contraction_profile(&op, &t, &[1.0, 1.0], 2, None),
            Err(SemigroupError::InsufficientData(_))
        ));
    }

    #[test]
    fn series_patterns() {
        let geo = ContractionProfile::from_values((1..=20).map(|n| 0.5f64.powi(n)).collect());
        assert_eq!(series_check(&geo).verdict, SeriesVerdict::Summable);
        let poly = ContractionProfile::from_values((1..=50).map(|n| (n as f64).powf(-0.5)).collect());
        let s = series_check(&poly);
        assert_eq!(s.regime, Regime::Polynomial);
        assert_eq!(s.verdict, SeriesVerdict::Summable);
        assert!((poly.fits.polynomial.unwrap().q - 1.5).abs() < 1e-9);
        let log = ContractionProfile::from_values((1..=200).map(|n| 1.0 / ((n as f64).ln() + 1e-300).max(0.5)).collect());
        let s = series_check(&log);
        assert_eq!(s.regime, Regime::Logarithmic);
        assert_eq!(s.verdict, SeriesVerdict::NonSummable);
        let flat = ContractionProfile::from_values(vec![1.0; 10]);
        assert_ne!(series_check(&flat).verdict, SeriesVerdict::Summable);
    }
}
