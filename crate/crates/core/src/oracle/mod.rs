//! Brute-force reference values: exhaustive enumeration of small trees,
//! dense eigensolves, quadrature and bisection.

mod perron;
mod quadrature;
mod tiny;

pub use perron::{dense_perron, DensePerron, MAX_DENSE};
pub use quadrature::{alpha_p, house_of_cards_rate, root_find, simpson};
pub use tiny::{Exact, TinyModel, MAX_CHILDREN, MAX_DEPTH, MAX_OUTCOMES, MAX_TYPES};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("enumeration of about {estimate:.3e} outcome trees exceeds the limit {limit:.0e}")]
    TooLarge { estimate: f64, limit: f64 },
    #[error("enumerated probabilities sum to {0}, not 1")]
    Mass(f64),
    #[error("no sign change on [{lo}, {hi}]: f = {f_lo}, {f_hi}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("matrix is not primitive")]
    NotPrimitive,
    #[error("invalid input: {0}")]
    Input(String),
}
