use serde::Serialize;

use crate::numerics::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Increasing,
    Decreasing,
    None,
}

/// Mann-Kendall test with the tie-corrected variance and continuity correction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannKendall {
    pub n: usize,
    pub s: i64,
    pub variance: f64,
    pub z: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub trend: Trend,
}

pub fn mann_kendall(xs: &[f64], alpha: f64) -> MannKendall {
    let n = xs.len();
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            s += match xs[j].partial_cmp(&xs[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        ties += t * (t - 1.0) * (2.0 * t + 5.0);
        i = j;
    }
    let nf = n as f64;
    let variance = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - ties) / 18.0;
    let z = if variance <= 0.0 {
        0.0
    } else if s > 0 {
        (s - 1) as f64 / variance.sqrt()
    } else if s < 0 {
        (s + 1) as f64 / variance.sqrt()
    } else {
        0.0
    };
    let p_value = 2.0 * (1.0 - normal_cdf(z.abs()));
    let trend = if n < 3 || p_value >= alpha {
        Trend::None
    } else if z > 0.0 {
        Trend::Increasing
    } else {
        Trend::Decreasing
    };
    MannKendall { n, s, variance, z, p_value: p_value.min(1.0), trend }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_sequences() {
        let up: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let r = mann_kendall(&up, 0.05);
        assert_eq!(r.s, 45);
        assert_eq!(r.variance, 125.0);
        assert_eq!(r.trend, Trend::Increasing);
        let down: Vec<f64> = up.iter().rev().cloned().collect();
        assert_eq!(mann_kendall(&down, 0.05).trend, Trend::Decreasing);
    }

    #[test]
    fn constant_and_short() {
        let r = mann_kendall(&[0.0; 8], 0.05);
        assert_eq!((r.s, r.trend), (0, Trend::None));
        assert_eq!(r.variance, 0.0);
        assert_eq!(mann_kendall(&[1.0, 0.0], 0.05).trend, Trend::None);
    }

    #[test]
    fn alternating_has_no_trend() {
        let xs: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        assert_eq!(mann_kendall(&xs, 0.05).trend, Trend::None);
    }
}
