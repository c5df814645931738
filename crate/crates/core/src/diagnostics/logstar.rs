use super::DiagnosticsError;

/// `log*(x) = x / e` on `[0, e]` and `log x` beyond.
pub fn log_star(x: f64) -> Result<f64, DiagnosticsError> {
    if x.is_nan() || x < 0.0 {
        return Err(DiagnosticsError::Domain(x));
    }
    Ok(crate::numerics::log_star(x))
}

/// `x log*(x)`: non-negative, non-decreasing and convex on `[0, inf)`.
pub fn x_log_star(x: f64) -> Result<f64, DiagnosticsError> {
    Ok(x * log_star(x)?)
}
