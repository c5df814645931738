use super::OracleError;
use crate::models::FragmentLaw;
use crate::numerics::CompensatedSum;

/// Composite Simpson rule with `n` (rounded up to even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2).next_multiple_of(2);
    let h = (b - a) / n as f64;
    let mut acc = CompensatedSum::new();
    acc.add(f(a));
    acc.add(f(b));
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc.add(w * f(a + i as f64 * h));
    }
    acc.value() * h / 3.0
}

/// Bisection on a bracket with a sign change, until `|f| < tol` or the
/// bracket stops shrinking.
pub fn root_find(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64, OracleError> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(OracleError::Bracket { lo, hi, f_lo: fa, f_hi: fb });
    }
    let neg_at_a = fa < 0.0;
    loop {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm.abs() < tol || mid <= a || mid >= b {
            return Ok(mid);
        }
        if (fm < 0.0) == neg_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
}

/// Malthusian rate of the house-of-cards model with global immigration at
/// rate `imm`: the root of `imm int_0^1 dx / (lambda + alpha(x)) = 1` above
/// `-min alpha`, integrals by Simpson with `n` intervals.
pub fn house_of_cards_rate(alpha: impl Fn(f64) -> f64, imm: f64, n: usize) -> Result<f64, OracleError> {
    let amin = (0..=n).map(|i| alpha(i as f64 / n as f64)).fold(f64::INFINITY, f64::min);
    let amax = (0..=n).map(|i| alpha(i as f64 / n as f64)).fold(f64::NEG_INFINITY, f64::max);
    let g = |l: f64| imm * simpson(|x| 1.0 / (l + alpha(x)), 0.0, 1.0, n) - 1.0;
    let lo = -amin + 1e-9 * (1.0 + amin.abs());
    root_find(g, lo, imm - amin + amax.abs() + 1.0, 1e-14)
}

/// `alpha_p = 1 - E[theta^p + (1 - theta)^p]` by Simpson with `n` intervals.
pub fn alpha_p(split: &FragmentLaw, p: f64, n: usize) -> Result<f64, OracleError> {
    match *split {
        FragmentLaw::Fixed { theta } => Ok(1.0 - theta.powf(p) - (1.0 - theta).powf(p)),
        FragmentLaw::Uniform => Ok(1.0 - simpson(|t| t.powf(p) + (1.0 - t).powf(p), 0.0, 1.0, n)),
        FragmentLaw::Beta { a, b } => {
            if a < 1.0 || b < 1.0 {
                return Err(OracleError::Input("beta density must be bounded".into()));
            }
            let dens = |t: f64| t.powf(a - 1.0) * (1.0 - t).powf(b - 1.0);
            let z = simpson(dens, 0.0, 1.0, n);
            Ok(1.0 - simpson(|t| dens(t) * (t.powf(p) + (1.0 - t).powf(p)), 0.0, 1.0, n) / z)
        }
    }
}
