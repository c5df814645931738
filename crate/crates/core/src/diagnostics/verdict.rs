use serde::Serialize;

use super::{exact_llogl, mann_kendall, DiagnosticsError, MannKendall, MartingaleTrace, Trend};
use crate::numerics::{csum, SampleSummary};
use crate::oracle::TinyModel;
use crate::semigroup::{contraction_profile, eigen_triplet, EigenOptions, EigenTriplet, MatrixOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerdictTolerances {
    /// Width of the z-tests in standard errors.
    pub z: f64,
    /// Mann-Kendall significance level.
    pub alpha: f64,
}

impl Default for VerdictTolerances {
    fn default() -> Self {
        Self { z: 3.0, alpha: 0.05 }
    }
}

/// Convergence of `X_n(f)` towards `gamma(f) W` across replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceVerdict {
    pub f_name: String,
    pub gamma_f: f64,
    pub h_x0: f64,
    pub replicates: usize,
    /// `mean_replicates |X_n(f) - gamma(f) W_hat|` per step.
    pub residual_l1: Vec<f64>,
    /// Trend of `residual_l1` over its trailing third.
    pub trailing_trend: MannKendall,
    /// Cross-replicate `W_hat`, tested against `h(x0)`.
    pub w_hat: SampleSummary,
    pub w_pass: bool,
    /// `X_N(f) - gamma(f) W_hat`, tested against 0.
    pub limit: SampleSummary,
    pub limit_pass: bool,
    /// `mean |X_N(f) - X_{N-1}(f)|`.
    pub n_sensitivity: f64,
    pub pass: bool,
}

/// `paths[i]` is `X_0(f), ..., X_N(f)` of replicate `i` and `w_hat[i]` its
/// `X_N(h)`; paths may stop early.
pub fn convergence_verdict(
    f_name: &str,
    paths: &[&[f64]],
    w_hat: &[f64],
    gamma_f: f64,
    h_x0: f64,
    tol: VerdictTolerances,
) -> Result<ConvergenceVerdict, DiagnosticsError> {
    if paths.is_empty() || paths.len() != w_hat.len() || paths.iter().any(|p| p.is_empty()) {
        return Err(DiagnosticsError::Input("need one non-empty path and one W_hat per replicate".into()));
    }
    let len = paths.iter().map(|p| p.len()).max().expect("non-empty");
    let residual_l1: Vec<f64> = (0..len)
        .map(|n| {
            let r: Vec<f64> =
                paths.iter().zip(w_hat).filter(|(p, _)| p.len() > n).map(|(p, w)| (p[n] - gamma_f * w).abs()).collect();
            csum(r.iter().copied()) / r.len() as f64
        })
        .collect();
    let start = len - (len / 3).max(3).min(len);
    let trailing_trend = mann_kendall(&residual_l1[start..], tol.alpha);
    let w = SampleSummary::of(w_hat);
    let limit: Vec<f64> = paths.iter().zip(w_hat).map(|(p, w)| p[p.len() - 1] - gamma_f * w).collect();
    let limit = SampleSummary::of(&limit);
    let jumps: Vec<f64> = paths.iter().filter(|p| p.len() > 1).map(|p| (p[p.len() - 1] - p[p.len() - 2]).abs()).collect();
    let n_sensitivity = if jumps.is_empty() { 0.0 } else { csum(jumps.iter().copied()) / jumps.len() as f64 };
    let w_pass = w.within(h_x0, tol.z);
    let limit_pass = limit.within(0.0, tol.z);
    let pass = w_pass && limit_pass && trailing_trend.trend != Trend::Increasing;
    Ok(ConvergenceVerdict {
        f_name: f_name.to_string(),
        gamma_f,
        h_x0,
        replicates: paths.len(),
        residual_l1,
        trailing_trend,
        w_hat: w,
        w_pass,
        limit,
        limit_pass,
        n_sensitivity,
        pass,
    })
}

impl ConvergenceVerdict {
    /// Verdict from martingale traces of one functional.
    pub fn from_traces(
        traces: &[MartingaleTrace],
        gamma_f: f64,
        h_x0: f64,
        tol: VerdictTolerances,
    ) -> Result<Self, DiagnosticsError> {
        let name = traces.first().map(|t| t.f_name.clone()).unwrap_or_default();
        let paths: Vec<&[f64]> = traces.iter().map(|t| t.values.as_slice()).collect();
        let w: Vec<f64> = traces.iter().map(|t| t.w_hat).collect();
        convergence_verdict(&name, &paths, &w, gamma_f, h_x0, tol)
    }
}

/// Block length `r` with `a_r` below a threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RSelection {
    pub r: usize,
    pub a_r: f64,
    pub threshold: f64,
    /// `a_0, ..., a_{r_max}` of the unit step operator.
    pub profile: Vec<f64>,
}

/// Smallest `r <= r_max` with `a_r < threshold`, from the profile of the
/// unit step operator (`T_r = T^r`).
pub fn select_r(
    op: &MatrixOperator,
    triplet: &EigenTriplet,
    vstar: &[f64],
    r_max: usize,
    threshold: f64,
) -> Result<RSelection, DiagnosticsError> {
    let p = contraction_profile(op, triplet, vstar, r_max.max(3), None)?;
    (1..=r_max)
        .find(|&r| p.a[r] < threshold)
        .map(|r| RSelection { r, a_r: p.a[r], threshold, profile: p.a[..=r_max].to_vec() })
        .ok_or(DiagnosticsError::NoContraction { r_max, threshold })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecursionRow {
    pub m: usize,
    pub q: usize,
    pub r: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `I_{mq+r} <= lambda^{mq+r} C^m (I_r + gamma(V*) I_q + 1)` on exact values,
/// with `C` the smallest constant such that `M^n V <= C lambda^n V` for
/// `n <= c_horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecursionCheck {
    pub lambda: f64,
    pub c: f64,
    pub gamma_vstar: f64,
    /// Exact `I_0, ..., I_{n_max}`.
    pub exact: Vec<f64>,
    pub rows: Vec<RecursionRow>,
    pub holds: bool,
}

pub fn recursion_check(
    tiny: &TinyModel,
    v: &[f64],
    vstar: &[f64],
    n_max: usize,
    c_horizon: usize,
) -> Result<RecursionCheck, DiagnosticsError> {
    if v.iter().any(|x| !(*x > 0.0)) {
        return Err(DiagnosticsError::Input("V must be positive".into()));
    }
    let op = MatrixOperator::from_mean_matrix(&tiny.mean_matrix(), 1)?;
    let t = eigen_triplet(&op, EigenOptions::default())?;
    let mut c: f64 = 1.0;
    let mut g = v.to_vec();
    for n in 1..=c_horizon {
        g = op.apply(&g);
        let scale = t.lambda.powi(n as i32);
        c = c.max(g.iter().zip(v).map(|(a, b)| a / (scale * b)).fold(0.0, f64::max));
    }
    let exact: Vec<f64> = (0..=n_max).map(|n| exact_llogl(tiny, v, vstar, n).map(|e| e.0)).collect::<Result<_, _>>()?;
    let gamma_vstar = t.gamma_of(vstar);
    let mut rows = Vec::new();
    for m in 1..=n_max {
        for q in 1..=n_max / m {
            for r in 0..=n_max - m * q {
                let n = m * q + r;
                let lhs = exact[n];
                let rhs = t.lambda.powi(n as i32) * c.powi(m as i32) * (exact[r] + gamma_vstar * exact[q] + 1.0);
                rows.push(RecursionRow { m, q, r, lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) });
            }
        }
    }
    let holds = rows.iter().all(|r| r.holds);
    Ok(RecursionCheck { lambda: t.lambda, c, gamma_vstar, exact, rows, holds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_residuals_pass() {
        let p = vec![4.0 / 3.0; 11];
        let paths: Vec<&[f64]> = vec![&p; 5];
        let v = convergence_verdict("h", &paths, &[4.0 / 3.0; 5], 1.0, 4.0 / 3.0, VerdictTolerances::default()).unwrap();
        assert!(v.pass, "{v:?}");
        assert!(v.residual_l1.iter().all(|r| *r == 0.0));
        assert_eq!(v.trailing_trend.trend, Trend::None);
    }

    #[test]
    fn biased_w_fails() {
        let p: Vec<Vec<f64>> = (0..50).map(|i| vec![1.0, 2.0 + 0.01 * i as f64]).collect();
        let paths: Vec<&[f64]> = p.iter().map(|v| v.as_slice()).collect();
        let w: Vec<f64> = p.iter().map(|v| v[1]).collect();
        let v = convergence_verdict("h", &paths, &w, 1.0, 1.0, VerdictTolerances::default()).unwrap();
        assert!(!v.w_pass && !v.pass);
        assert!(v.limit_pass);
    }

    #[test]
    fn select_r_on_two_type_matrix() {
        let op = MatrixOperator::from_mean_matrix(&[vec![1.0, 2.0], vec![1.0, 0.0]], 1).unwrap();
        let t = eigen_triplet(&op, EigenOptions::default()).unwrap();
        let s = select_r(&op, &t, &[1.0, 1.0], 10, 0.9).unwrap();
        assert!(s.a_r < 0.9);
        assert!(s.profile[..s.r].iter().skip(1).all(|a| *a >= 0.9));
        assert!(matches!(select_r(&op, &t, &[1.0, 1.0], 1, 1e-9), Err(DiagnosticsError::NoContraction { .. })));
    }

    #[test]
    fn recursion_bound_on_tiny_models() {
        let mut checked = 0;
        for (name, m) in TinyModel::catalogue() {
            let k = m.n_types();
            let Ok(check) = recursion_check(&m, &vec![1.0; k], &vec![1.0; k], 4, 20) else {
                continue;
            };
            assert!(check.holds, "{name}: {:?}", check.rows.iter().find(|r| !r.holds));
            checked += 1;
        }
        assert!(checked >= 5, "{checked}");
    }
}
