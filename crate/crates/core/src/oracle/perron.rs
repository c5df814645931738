use nalgebra::DMatrix;
use serde::Serialize;

use super::OracleError;
use crate::numerics::csum;
use crate::semigroup::{primitivity, EigenTriplet, Primitivity, Step};

pub const MAX_DENSE: usize = 200;

/// Dominant triplet from a full eigendecomposition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensePerron {
    pub triplet: EigenTriplet,
    /// `|lambda_2|`, the largest modulus among the other eigenvalues.
    pub lambda2: f64,
    /// `|lambda_2| / lambda`.
    pub gap_ratio: f64,
}

/// Null vector of `a` from the right singular vector of the smallest singular value.
fn null_vector(a: &DMatrix<f64>) -> Vec<f64> {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, s)| if *s < best.1 { (i, *s) } else { best });
    v_t.row(k).iter().copied().collect()
}

/// Perron triplet of a nonnegative primitive matrix by real Schur
/// decomposition (eigenvalues) and singular value decomposition of
/// `A - lambda I` and its transpose (eigenvectors), normalised by
/// `sum gamma = 1`, `gamma(h) = 1`.
pub fn dense_perron(m: &DMatrix<f64>) -> Result<DensePerron, OracleError> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n || n > MAX_DENSE {
        return Err(OracleError::Input(format!("need a square matrix of size 1..={MAX_DENSE}")));
    }
    if m.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(OracleError::Input("matrix has negative or non-finite entries".into()));
    }
    if primitivity(m) != Primitivity::Primitive {
        return Err(OracleError::NotPrimitive);
    }
    let eig = m.clone().schur().complex_eigenvalues();
    let (top, _) = eig
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, z)| if z.re > best.1 { (i, z.re) } else { best });
    let lambda0 = eig[top].re;
    let lambda2 = eig.iter().enumerate().filter(|(i, _)| *i != top).map(|(_, z)| z.norm()).fold(0.0, f64::max);
    let shifted = m - DMatrix::identity(n, n) * lambda0;
    let mut h = null_vector(&shifted);
    let mut gamma = null_vector(&shifted.transpose());
    if csum(h.iter().copied()) < 0.0 {
        h.iter_mut().for_each(|x| *x = -*x);
    }
    let total = csum(gamma.iter().copied());
    gamma.iter_mut().for_each(|g| *g /= total);
    let gh = csum(gamma.iter().zip(&h).map(|(g, x)| g * x));
    h.iter_mut().for_each(|x| *x /= gh);
    let mh: Vec<f64> = (0..n).map(|i| csum((0..n).map(|j| m[(i, j)] * h[j]))).collect();
    let gm: Vec<f64> = (0..n).map(|j| csum((0..n).map(|i| gamma[i] * m[(i, j)]))).collect();
    // Rayleigh quotient with the left vector.
    let lambda = csum(gamma.iter().zip(&mh).map(|(g, v)| g * v));
    let sup = |v: &[f64]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let rr = sup(&mh.iter().zip(&h).map(|(a, b)| a - lambda * b).collect::<Vec<_>>()) / (lambda * sup(&h));
    let rl = sup(&gm.iter().zip(&gamma).map(|(a, b)| a - lambda * b).collect::<Vec<_>>()) / (lambda * sup(&gamma));
    Ok(DensePerron {
        triplet: EigenTriplet {
            lambda,
            rate: lambda.ln(),
            step: Step::Generations(1),
            h,
            gamma,
            residual_right: rr,
            residual_left: rl,
            iterations: 0,
        },
        lambda2,
        gap_ratio: lambda2 / lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn symmetric_case() {
        let p = dense_perron(&DMatrix::from_element(2, 2, 1.0)).unwrap();
        assert!((p.triplet.lambda - 2.0).abs() < 1e-14);
        assert!(p.gap_ratio < 1e-14);
        assert!(p.triplet.h.iter().all(|h| (h - 1.0).abs() < 1e-14));
    }

    #[test]
    fn two_type_case() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 0.0]);
        let p = dense_perron(&m).unwrap();
        assert!((p.triplet.lambda - 2.0).abs() < 1e-14);
        assert!((p.lambda2 - 1.0).abs() < 1e-14);
        assert!((p.gap_ratio - 0.5).abs() < 1e-14);
        assert!((p.triplet.h[0] - 4.0 / 3.0).abs() < 1e-14);
        assert!((p.triplet.gamma[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn random_positive_residuals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let m = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>());
            let p = dense_perron(&m).unwrap();
            assert!(p.triplet.residual_right < 1e-12 && p.triplet.residual_left < 1e-12);
        }
    }

    #[test]
    fn periodic_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(dense_perron(&m), Err(OracleError::NotPrimitive)));
    }
}
