use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{MatrixOperator, SemigroupError, Step};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenOptions {
    /// Relative residual target: `|Kh - lambda h|_inf <= tol lambda |h|_inf`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 100_000 }
    }
}

/// Structure of the support graph of a nonnegative matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Primitivity {
    Primitive,
    /// Irreducible with period greater than one.
    Periodic,
    Reducible,
}

/// Perron triplet of an operator over one step, normalised by
/// `sum gamma = 1` and `gamma(h) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenTriplet {
    /// Eigenvalue of the step operator (`lambda^r` or `e^{Lambda t}`).
    pub lambda: f64,
    /// `log(lambda) / step`: the Malthusian rate, per generation or time unit.
    pub rate: f64,
    pub step: Step,
    pub h: Vec<f64>,
    /// Probability weights on the nodes.
    pub gamma: Vec<f64>,
    pub residual_right: f64,
    pub residual_left: f64,
    pub iterations: usize,
}

impl EigenTriplet {
    /// Eigenvalue per unit step, `e^{rate}`.
    pub fn lambda_per_unit(&self) -> f64 {
        self.rate.exp()
    }

    /// `gamma(f) = sum_i gamma_i f_i`.
    pub fn gamma_of(&self, f: &[f64]) -> f64 {
        crate::numerics::csum(self.gamma.iter().zip(f).map(|(g, v)| g * v))
    }
}

/// Boolean matrix with bit-packed rows.
#[derive(Clone, PartialEq)]
struct BitMatrix {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl BitMatrix {
    fn support(m: &DMatrix<f64>, with_identity: bool) -> Self {
        let n = m.nrows();
        let words = n.div_ceil(64);
        let mut rows = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] > 0.0 || (with_identity && i == j) {
                    rows[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self { n, words, rows }
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn mul(&self, other: &Self) -> Self {
        let mut rows = vec![0u64; self.rows.len()];
        for i in 0..self.n {
            let out = &mut rows[i * self.words..(i + 1) * self.words];
            let a = self.row(i);
            for k in 0..self.n {
                if a[k / 64] >> (k % 64) & 1 == 1 {
                    for (o, b) in out.iter_mut().zip(other.row(k)) {
                        *o |= b;
                    }
                }
            }
        }
        Self { n: self.n, words: self.words, rows }
    }

    fn all_ones(&self) -> bool {
        let full = self.n / 64;
        let rest = self.n % 64;
        (0..self.n).all(|i| {
            let r = self.row(i);
            r[..full].iter().all(|w| *w == u64::MAX) && (rest == 0 || r[full] == (1u64 << rest) - 1)
        })
    }

    /// Squares until some power is positive or the exponent passes `bound`.
    fn positive_power_within(&self, bound: u128) -> bool {
        let mut p = self.clone();
        let mut e: u128 = 1;
        loop {
            if p.all_ones() {
                return true;
            }
            if e >= bound {
                return false;
            }
            let next = p.mul(&p);
            if next == p {
                return false;
            }
            p = next;
            e *= 2;
        }
    }
}

/// Primitive iff some power is positive; by Wielandt's bound it suffices to
/// look up to exponent `(N-1)^2 + 1`. Irreducible iff `(I + A)^{N-1} > 0`.
pub fn primitivity(m: &DMatrix<f64>) -> Primitivity {
    let n = m.nrows() as u128;
    if n == 0 || (n == 1 && m[(0, 0)] <= 0.0) {
        return Primitivity::Reducible;
    }
    if BitMatrix::support(m, false).positive_power_within((n - 1) * (n - 1) + 1) {
        return Primitivity::Primitive;
    }
    if BitMatrix::support(m, true).positive_power_within(n.saturating_sub(1).max(1)) {
        Primitivity::Periodic
    } else {
        Primitivity::Reducible
    }
}

/// Right and left power iteration on a primitive operator.
pub fn eigen_triplet(op: &MatrixOperator, opts: EigenOptions) -> Result<EigenTriplet, SemigroupError> {
    let k = op.matrix();
    match primitivity(k) {
        Primitivity::Primitive => {}
        Primitivity::Periodic => {
            return Err(SemigroupError::Periodicity("operator is irreducible but not aperiodic".into()))
        }
        Primitivity::Reducible => return Err(SemigroupError::NonPrimitive("operator is reducible".into())),
    }
    let n = k.nrows();
    let mut v = DVector::from_element(n, 1.0);
    let mut u = DVector::from_element(n, 1.0 / n as f64);
    let mut iterations = 0;
    let (lambda, rr, rl) = loop {
        iterations += 1;
        let kv = k * &v;
        let uk = k.tr_mul(&u);
        let lambda = uk.dot(&v) / u.dot(&v);
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(SemigroupError::Convergence(format!("eigenvalue estimate {lambda} at iteration {iterations}")));
        }
        let rr = (&kv - &v * lambda).amax() / (lambda * v.amax());
        let rl = (&uk - &u * lambda).amax() / (lambda * u.amax());
        let s = kv.amax();
        v = kv / s;
        let t = uk.sum();
        u = uk / t;
        if rr <= opts.tol && rl <= opts.tol {
            break (lambda, rr, rl);
        }
        if iterations >= opts.max_iter {
            return Err(SemigroupError::Convergence(format!(
                "residuals {rr:.3e}, {rl:.3e} after {iterations} iterations"
            )));
        }
    };
    let mut gamma: Vec<f64> = u.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = gamma.iter().sum();
    gamma.iter_mut().for_each(|g| *g /= total);
    let mut h: Vec<f64> = v.as_slice().to_vec();
    if h.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m }) < 0.0 {
        h.iter_mut().for_each(|x| *x = -*x);
    }
    let gh = crate::numerics::csum(gamma.iter().zip(&h).map(|(g, x)| g * x));
    h.iter_mut().for_each(|x| *x /= gh);
    let step = op.step();
    Ok(EigenTriplet {
        lambda,
        rate: lambda.ln() / step.length(),
        step,
        h,
        gamma,
        residual_right: rr,
        residual_left: rl,
        iterations,
    })
}
