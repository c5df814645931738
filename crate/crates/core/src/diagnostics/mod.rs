//! Martingale and moment diagnostics: the renormalised martingale `X_n` and
//! its increments, the truncation split, the rest term, `L log L`
//! statistics and convergence verdicts.

mod jensen;
mod llogl;
mod logstar;
mod martingale;
mod report;
mod trend;
mod verdict;

pub use jensen::{convexity_probe, jensen_check, ConvexityProbe, JensenReport};
pub use llogl::{exact_llogl, lloglstat_continuous, lloglstat_discrete, LlogLStats, CENSOR_WARNING};
pub use logstar::{log_star, x_log_star};
pub use martingale::{
    continuous_martingale, martingale_trace, rest_term, ContinuousMartingale, MartingaleTrace, RestTerm, SubtreeLaw,
    INNER_SAMPLES,
};
pub use report::{trace_rows, write_trace_csv, ContractionSection, DiagnosticsReport, MartingaleSection, TraceRow};
pub use trend::{mann_kendall, MannKendall, Trend};
pub use verdict::{
    convergence_verdict, recursion_check, select_r, ConvergenceVerdict, RSelection, RecursionCheck, RecursionRow,
    VerdictTolerances,
};

use thiserror::Error;

use crate::models::ModelError;
use crate::oracle::OracleError;
use crate::semigroup::SemigroupError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("log* is undefined at {0}")]
    Domain(f64),
    #[error("input: {0}")]
    Input(String),
    #[error("no r <= {r_max} with a_r < {threshold}")]
    NoContraction { r_max: usize, threshold: f64 },
    #[error("export: {0}")]
    Export(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Oracle(OracleError),
}
