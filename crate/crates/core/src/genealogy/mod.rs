//! Genealogical bookkeeping: Ulam-Harris labels, labelled point measures and
//! label-keyed random streams.
//!
//! Every individual is addressed by the sequence of child indices leading to
//! it from the founder. Randomness used by an individual is drawn from a
//! stream that is a pure function of `(seed, label, counter)`, so the law of
//! a simulated tree does not depend on the order in which individuals are
//! processed or on how work is split across threads.

mod label;
mod measure;
mod stream;

pub use label::{UlamLabel, MAX_DEPTH, MAX_FANOUT};
pub use measure::{Atom, PointMeasure, TimeIndex};
pub use stream::{replicate_seed, stream_for, LabelKey, LabelStream};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenealogyError {
    #[error("child index {0} outside 1..=2^32-1")]
    FanOut(u64),
    #[error("label depth would exceed {MAX_DEPTH}")]
    Depth,
    #[error("duplicate label {0} in point measure")]
    DuplicateLabel(String),
    #[error("non-finite functional value {value} at atom {label}")]
    NonFinite { label: String, value: f64 },
    #[error("label {label} has depth {depth}, expected {expected} for this generation")]
    GenerationMismatch { label: String, depth: usize, expected: usize },
}
