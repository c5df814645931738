//! Simulation and first-moment spectral diagnostics for structured
//! supercritical branching processes.
//!
//! The crate is organised around five layers:
//!
//! * [`genealogy`]: Ulam-Harris labels, point measures over a trait space and
//!   label-keyed reproducible random streams.
//! * [`models`]: declarative branching models (multitype Galton-Watson,
//!   house of cards, growth-fragmentation, absorbed branching diffusion) and
//!   their discrete and continuous time simulators, plus drift certificates.
//! * [`semigroup`]: grid discretisations of the first-moment semigroup,
//!   Perron eigen-triplets, the contraction operator and contraction profiles.
//! * [`diagnostics`]: martingale increments, the truncation split, the rest
//!   term of the renormalised decomposition, `L log L` statistics and
//!   convergence verdicts.
//! * [`oracle`]: brute-force ground truth used to validate everything above.
//!
//! The [`cli`] module drives experiments from TOML configuration files; the
//! `branchkit` binary is a thin wrapper around it.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod genealogy;
pub mod models;
pub mod numerics;
pub mod oracle;
pub mod semigroup;

pub use error::{Error, Result};
