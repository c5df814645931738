use std::io::Write;

use serde::Serialize;

use crate::numerics::fmt17;

use super::{ContractionProfile, EigenTriplet, GridScheme, MatrixOperator, SemigroupError, Step};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub right: f64,
    pub left: f64,
}

/// Serialised eigen-triplet document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripletExport {
    pub lambda: f64,
    pub rate: f64,
    pub step: Step,
    pub nodes: Vec<f64>,
    pub h: Vec<f64>,
    pub gamma: Vec<f64>,
    pub residuals: Residuals,
    pub grid_scheme: GridScheme,
    pub iterations: usize,
}

impl TripletExport {
    pub fn new(op: &MatrixOperator, t: &EigenTriplet) -> Self {
        Self {
            lambda: t.lambda,
            rate: t.rate,
            step: t.step,
            nodes: op.grid().nodes().to_vec(),
            h: t.h.clone(),
            gamma: t.gamma.clone(),
            residuals: Residuals { right: t.residual_right, left: t.residual_left },
            grid_scheme: op.grid().scheme(),
            iterations: t.iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub n: usize,
    pub a_n: f64,
    pub fit_geometric: Option<f64>,
    pub fit_polynomial: Option<f64>,
}

/// Rows `n, a_n` with the fitted geometric and polynomial curves.
pub fn profile_rows(p: &ContractionProfile) -> Vec<ProfileRow> {
    p.a.iter()
        .enumerate()
        .map(|(n, &a_n)| {
            let k = n as f64;
            ProfileRow {
                n,
                a_n,
                fit_geometric: p.fits.geometric.map(|f| f.c * f.eta.powf(k)),
                fit_polynomial: p.fits.polynomial.filter(|_| n > 0).map(|f| f.c * k.powf(f.exponent)),
            }
        })
        .collect()
}

/// Writes the profile as CSV with header `n,a_n,fit_geometric,fit_polynomial`;
/// missing fits are empty fields.
pub fn write_profile_csv<W: Write>(p: &ContractionProfile, out: W) -> Result<(), SemigroupError> {
    let err = |e: csv::Error| SemigroupError::Export(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "a_n", "fit_geometric", "fit_polynomial"]).map_err(err)?;
    let opt = |x: Option<f64>| x.map(fmt17).unwrap_or_default();
    for row in profile_rows(p) {
        w.write_record([row.n.to_string(), fmt17(row.a_n), opt(row.fit_geometric), opt(row.fit_polynomial)])
            .map_err(err)?;
    }
    w.flush().map_err(|e| SemigroupError::Export(e.to_string()))
}
