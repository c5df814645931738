//! First-moment semigroups on grids: operator assembly, Perron triplets,
//! the contraction operator `T` and contraction profiles.

mod contraction;
mod eigen;
mod export;
mod generator;
mod grid;
mod operator;

pub use contraction::{
    apply_t, contraction_profile, series_check, weighted_norm, ContractionProfile, GeometricFit, LogarithmicFit,
    PolynomialFit, Regime, RegimeFits, SeriesCheck, SeriesVerdict,
};
pub use eigen::{eigen_triplet, primitivity, EigenOptions, EigenTriplet, Primitivity};
pub use export::{profile_rows, write_profile_csv, ProfileRow, Residuals, TripletExport};
pub use generator::{generator, Generator, NEGATIVITY_TOL};
pub use grid::{Grid, GridScheme};
pub use operator::{
    assemble, default_grid, default_vstar, exponentiate, Assembly, ExpMethod, MatrixOperator, Step, ENTRY_TOL,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemigroupError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("assembly: {0}")]
    Assembly(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("operator is not primitive: {0}")]
    NonPrimitive(String),
    #[error("periodic operator: {0}")]
    Periodicity(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("export: {0}")]
    Export(String),
}
