use serde::Serialize;

use super::{log_star, x_log_star, DiagnosticsError};
use crate::numerics::{csum, SampleSummary};

/// Empirical check of
/// `E S log* S <= E S log* E S + sum_i E X_i log* X_i` for `S = sum_i X_i`
/// with independent non-negative summands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JensenReport {
    pub samples: usize,
    pub lhs: f64,
    /// `E S log* E S`.
    pub mean_term: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    /// Delta-method standard error of `margin`.
    pub std_err: f64,
    /// Margin holds at `-3` standard errors.
    pub holds: bool,
}

impl JensenReport {
    pub fn margin_sigmas(&self) -> f64 {
        if self.std_err > 0.0 {
            self.margin / self.std_err
        } else if self.margin >= 0.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// `draws[j]` holds the summands of the `j`-th independent draw.
pub fn jensen_check(draws: &[Vec<f64>]) -> Result<JensenReport, DiagnosticsError> {
    if draws.is_empty() {
        return Err(DiagnosticsError::Input("no draws".into()));
    }
    let mut s = Vec::with_capacity(draws.len());
    let mut sum_terms = Vec::with_capacity(draws.len());
    let mut s_terms = Vec::with_capacity(draws.len());
    for d in draws {
        if d.iter().any(|x| !(*x >= 0.0)) {
            return Err(DiagnosticsError::Input("summands must be non-negative".into()));
        }
        let total = csum(d.iter().copied());
        s.push(total);
        s_terms.push(x_log_star(total)?);
        sum_terms.push(csum(d.iter().map(|x| x * crate::numerics::log_star(*x))));
    }
    let m = SampleSummary::of(&s).mean;
    let lhs = SampleSummary::of(&s_terms).mean;
    let mean_term = m * log_star(m)?;
    let rhs = mean_term + SampleSummary::of(&sum_terms).mean;
    // derivative of m log* m
    let slope = if m <= std::f64::consts::E { 2.0 * m / std::f64::consts::E } else { m.ln() + 1.0 };
    let psi: Vec<f64> = (0..draws.len()).map(|j| sum_terms[j] - s_terms[j] + slope * s[j]).collect();
    let std_err = SampleSummary::of(&psi).std_err;
    let margin = rhs - lhs;
    Ok(JensenReport { samples: draws.len(), lhs, mean_term, rhs, margin, std_err, holds: margin >= -3.0 * std_err })
}

/// Convexity of `x log* x` on an ordered triple `a < b < c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityProbe {
    pub points: [f64; 3],
    /// `phi(b)` against the chord through `a` and `c`.
    pub value: f64,
    pub chord: f64,
    /// `phi((a + c) / 2)` against `(phi(a) + phi(c)) / 2`.
    pub midpoint_value: f64,
    pub midpoint_average: f64,
    pub holds: bool,
}

pub fn convexity_probe(a: f64, b: f64, c: f64) -> Result<ConvexityProbe, DiagnosticsError> {
    if !(a < b && b < c) {
        return Err(DiagnosticsError::Input(format!("points must be increasing: {a}, {b}, {c}")));
    }
    let (fa, fb, fc) = (x_log_star(a)?, x_log_star(b)?, x_log_star(c)?);
    let w = (b - a) / (c - a);
    let chord = (1.0 - w) * fa + w * fc;
    let midpoint_value = x_log_star(0.5 * (a + c))?;
    let midpoint_average = 0.5 * (fa + fc);
    let tol = 1e-12 * fa.abs().max(fc.abs()).max(1.0);
    Ok(ConvexityProbe {
        points: [a, b, c],
        value: fb,
        chord,
        midpoint_value,
        midpoint_average,
        holds: fb <= chord + tol && midpoint_value <= midpoint_average + tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genealogy::{LabelStream, UlamLabel};
    use std::f64::consts::E;

    #[test]
    fn single_constant_summand_is_equality() {
        for c in [0.5, E, 7.0] {
            let r = jensen_check(&vec![vec![c]; 10]).unwrap();
            assert!((r.lhs - c * crate::numerics::log_star(c)).abs() < 1e-12 * c.max(1.0));
            assert!((r.mean_term - r.lhs).abs() < 1e-12 * c.max(1.0));
            // one summand: rhs counts c log* c twice against lhs once
            assert!((r.rhs - 2.0 * r.lhs).abs() < 1e-12 * c.max(1.0));
        }
    }

    #[test]
    fn convexity_on_reference_triple() {
        let p = convexity_probe(1.0, E, E * E).unwrap();
        assert!(p.holds, "{p:?}");
        assert!(convexity_probe(2.0, 1.0, 3.0).is_err());
    }

    #[test]
    fn exponential_summands() {
        let mut s = LabelStream::new(11, UlamLabel::root());
        let draws: Vec<Vec<f64>> = (0..100_000).map(|_| vec![s.exp1(), s.exp1()]).collect();
        let r = jensen_check(&draws).unwrap();
        assert!(r.holds);
        assert!(r.margin_sigmas() > 3.0, "{r:?}");
    }
}
