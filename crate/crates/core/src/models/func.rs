use serde::{Deserialize, Serialize};

/// Declarative real function of one variable, used for rates, growth speeds,
/// drift/diffusion coefficients and Lyapunov weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScalarFn {
    Const { value: f64 },
    /// `intercept + slope * x`
    Affine { intercept: f64, slope: f64 },
    /// `coef * x^exponent`
    Power { coef: f64, exponent: f64 },
    /// `sum_k coeffs[k] * x^k`
    Poly { coeffs: Vec<f64> },
    /// Linear interpolation through sorted `[x, y]` points, constant outside.
    PiecewiseLinear { points: Vec<[f64; 2]> },
    /// `amplitude * sin(frequency * x)`
    Sine { amplitude: f64, frequency: f64 },
    /// `coef * x * ln(x)`, with value 0 at 0.
    XLogX { coef: f64 },
    /// `coef * |x - center|^exponent`
    AbsPower { coef: f64, center: f64, exponent: f64 },
}

impl ScalarFn {
    pub fn constant(value: f64) -> Self {
        ScalarFn::Const { value }
    }

    pub fn identity() -> Self {
        ScalarFn::Affine { intercept: 0.0, slope: 1.0 }
    }

    pub fn power(coef: f64, exponent: f64) -> Self {
        ScalarFn::Power { coef, exponent }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Const { value } => *value,
            ScalarFn::Affine { intercept, slope } => intercept + slope * x,
            ScalarFn::Power { coef, exponent } => {
                if *exponent == 0.0 {
                    *coef
                } else if *exponent == 1.0 {
                    coef * x
                } else if *exponent == 2.0 {
                    coef * x * x
                } else {
                    coef * x.powf(*exponent)
                }
            }
            ScalarFn::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            ScalarFn::PiecewiseLinear { points } => piecewise(points, x).0,
            ScalarFn::Sine { amplitude, frequency } => amplitude * (frequency * x).sin(),
            ScalarFn::XLogX { coef } => {
                if x == 0.0 {
                    0.0
                } else {
                    coef * x * x.ln()
                }
            }
            ScalarFn::AbsPower { coef, center, exponent } => coef * (x - center).abs().powf(*exponent),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Const { .. } => 0.0,
            ScalarFn::Affine { slope, .. } => *slope,
            ScalarFn::Power { coef, exponent } => {
                if *exponent == 0.0 {
                    0.0
                } else {
                    coef * exponent * x.powf(exponent - 1.0)
                }
            }
            ScalarFn::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c),
            ScalarFn::PiecewiseLinear { points } => piecewise(points, x).1,
            ScalarFn::Sine { amplitude, frequency } => amplitude * frequency * (frequency * x).cos(),
            ScalarFn::XLogX { coef } => coef * (x.ln() + 1.0),
            ScalarFn::AbsPower { coef, center, exponent } => {
                let d = x - center;
                coef * exponent * d.abs().powf(exponent - 1.0) * d.signum()
            }
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Const { .. } | ScalarFn::Affine { .. } | ScalarFn::PiecewiseLinear { .. } => 0.0,
            ScalarFn::Power { coef, exponent } => {
                if *exponent == 0.0 || *exponent == 1.0 {
                    0.0
                } else {
                    coef * exponent * (exponent - 1.0) * x.powf(exponent - 2.0)
                }
            }
            ScalarFn::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, c)| acc * x + (k * (k - 1)) as f64 * c),
            ScalarFn::Sine { amplitude, frequency } => {
                -amplitude * frequency * frequency * (frequency * x).sin()
            }
            ScalarFn::XLogX { coef } => coef / x,
            ScalarFn::AbsPower { coef, center, exponent } => {
                coef * exponent * (exponent - 1.0) * (x - center).abs().powf(exponent - 2.0)
            }
        }
    }

    /// An upper bound of the function on `[lo, hi]` (possibly `+inf`).
    ///
    /// Exact for monotone and piecewise-linear kinds; for the others a dense
    /// sample plus a Lipschitz margin.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            ScalarFn::Const { value } => *value,
            ScalarFn::Affine { .. } => self.eval(lo).max(self.eval(hi)),
            ScalarFn::Power { coef, exponent } => {
                if *exponent == 0.0 {
                    *coef
                } else if lo < 0.0 && exponent.fract() != 0.0 {
                    f64::NAN
                } else if *exponent < 0.0 && lo <= 0.0 && hi >= 0.0 {
                    if *coef > 0.0 {
                        f64::INFINITY
                    } else {
                        self.eval(lo).max(self.eval(hi))
                    }
                } else if lo >= 0.0 {
                    self.eval(lo).max(self.eval(hi))
                } else {
                    self.sampled_sup(lo, hi)
                }
            }
            ScalarFn::PiecewiseLinear { points } => {
                let mut m = self.eval(lo).max(self.eval(hi));
                for p in points {
                    if p[0] > lo && p[0] < hi {
                        m = m.max(p[1]);
                    }
                }
                m
            }
            ScalarFn::XLogX { .. } => {
                // convex for coef > 0: the max sits at an endpoint
                if self.second_derivative(1.0) >= 0.0 {
                    self.eval(lo.max(0.0)).max(self.eval(hi))
                } else {
                    self.sampled_sup(lo.max(0.0), hi)
                }
            }
            ScalarFn::AbsPower { coef, center, exponent } => {
                let far = (lo - center).abs().max((hi - center).abs());
                let near = if lo <= *center && *center <= hi {
                    0.0
                } else {
                    (lo - center).abs().min((hi - center).abs())
                };
                let (a, b) = (near.powf(*exponent), far.powf(*exponent));
                (coef * a).max(coef * b)
            }
            ScalarFn::Poly { .. } | ScalarFn::Sine { .. } => self.sampled_sup(lo, hi),
        }
    }

    fn sampled_sup(&self, lo: f64, hi: f64) -> f64 {
        if !lo.is_finite() || !hi.is_finite() {
            return f64::INFINITY;
        }
        const N: usize = 2048;
        let step = (hi - lo) / N as f64;
        let mut m = f64::NEG_INFINITY;
        let mut lip: f64 = 0.0;
        for i in 0..=N {
            let x = lo + step * i as f64;
            m = m.max(self.eval(x));
            lip = lip.max(self.derivative(x).abs());
        }
        // crude curvature allowance on the derivative sample
        m + 0.5 * step * lip * 2.0
    }
}

fn piecewise(points: &[[f64; 2]], x: f64) -> (f64, f64) {
    match points.len() {
        0 => (0.0, 0.0),
        1 => (points[0][1], 0.0),
        _ => {
            if x <= points[0][0] {
                return (points[0][1], 0.0);
            }
            let last = points[points.len() - 1];
            if x >= last[0] {
                return (last[1], 0.0);
            }
            let i = points.partition_point(|p| p[0] <= x).max(1) - 1;
            let [x0, y0] = points[i];
            let [x1, y1] = points[i + 1];
            let slope = (y1 - y0) / (x1 - x0);
            (y0 + slope * (x - x0), slope)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_derivatives() {
        let p = ScalarFn::Poly { coeffs: vec![1.0, -2.0, 3.0] };
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.derivative(2.0), -2.0 + 12.0);
        assert_eq!(p.second_derivative(2.0), 6.0);
        let pw = ScalarFn::power(2.0, 3.0);
        assert!((pw.derivative(2.0) - 24.0).abs() < 1e-12);
        assert!((pw.second_derivative(2.0) - 24.0).abs() < 1e-12);
        let pl = ScalarFn::PiecewiseLinear { points: vec![[0.0, 0.0], [1.0, 2.0], [2.0, 0.0]] };
        assert_eq!(pl.eval(0.5), 1.0);
        assert_eq!(pl.eval(1.5), 1.0);
        assert_eq!(pl.derivative(1.5), -2.0);
        assert_eq!(pl.eval(5.0), 0.0);
    }

    #[test]
    fn sup_bounds() {
        assert_eq!(ScalarFn::Affine { intercept: 1.0, slope: -1.0 }.sup_on(0.0, 1.0), 1.0);
        assert_eq!(ScalarFn::power(1.0, 3.0).sup_on(0.0, 2.0), 8.0);
        assert_eq!(ScalarFn::power(1.0, -1.0).sup_on(0.0, 2.0), f64::INFINITY);
        let s = ScalarFn::Sine { amplitude: 1.0, frequency: std::f64::consts::PI };
        let b = s.sup_on(0.0, 1.0);
        assert!((1.0..1.01).contains(&b));
        let pl = ScalarFn::PiecewiseLinear { points: vec![[0.0, 0.0], [1.0, 2.0], [2.0, 0.0]] };
        assert_eq!(pl.sup_on(0.0, 2.0), 2.0);
    }

    #[test]
    fn toml_roundtrip_shape() {
        let f: ScalarFn = toml::from_str("kind = \"power\"\ncoef = 1.0\nexponent = 3.0").unwrap();
        assert_eq!(f, ScalarFn::power(1.0, 3.0));
        assert!(toml::from_str::<ScalarFn>("kind = \"power\"\ncoef = 1.0\nexponent = 3.0\nextra = 1")
            .is_err());
    }
}
