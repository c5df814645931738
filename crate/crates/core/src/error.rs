use thiserror::Error;

use crate::diagnostics::DiagnosticsError;
use crate::genealogy::GenealogyError;
use crate::models::ModelError;
use crate::oracle::OracleError;
use crate::semigroup::SemigroupError;

/// Crate-level error; every variant is qualified by the module that raised it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("genealogy: {0}")]
    Genealogy(#[from] GenealogyError),
    #[error("models: {0}")]
    Model(#[from] ModelError),
    #[error("semigroup: {0}")]
    Semigroup(#[from] SemigroupError),
    #[error("diagnostics: {0}")]
    Diagnostics(#[from] DiagnosticsError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
