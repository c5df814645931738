use std::io::Write;

use serde::Serialize;

use super::{ConvergenceVerdict, DiagnosticsError, LlogLStats, MartingaleTrace, RSelection};
use crate::numerics::{fmt17, SampleSummary};
use crate::semigroup::{ContractionProfile, RegimeFits, SeriesCheck};

/// Cross-replicate summary of the martingale traces of one functional.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingaleSection {
    pub f_name: String,
    pub r: u32,
    pub r_selection: Option<RSelection>,
    pub exact_subtree_law: bool,
    pub replicates: usize,
    /// `Delta_n(f)` across replicates, `n = 0..=N`; each mean should be
    /// within a few standard errors of 0.
    pub increments: Vec<SampleSummary>,
    pub values: Vec<SampleSummary>,
    pub w_hat: SampleSummary,
    /// `None` when the truncation split was not computed.
    pub max_split_error: Option<f64>,
    /// Largest disagreement of the two rest-term routes.
    pub max_rest_diff: Option<f64>,
}

impl MartingaleSection {
    pub fn new(
        traces: &[MartingaleTrace],
        exact_subtree_law: bool,
        r_selection: Option<RSelection>,
        max_rest_diff: Option<f64>,
    ) -> Result<Self, DiagnosticsError> {
        let first = traces.first().ok_or_else(|| DiagnosticsError::Input("no traces".into()))?;
        let len = traces.iter().map(|t| t.values.len()).max().unwrap_or(0);
        let column = |n: usize, pick: &dyn Fn(&MartingaleTrace) -> &[f64]| {
            SampleSummary::of(&traces.iter().filter_map(|t| pick(t).get(n).copied()).collect::<Vec<_>>())
        };
        Ok(Self {
            f_name: first.f_name.clone(),
            r: first.r,
            r_selection,
            exact_subtree_law,
            replicates: traces.len(),
            increments: (0..len).map(|n| column(n, &|t| &t.increments)).collect(),
            values: (0..len).map(|n| column(n, &|t| &t.values)).collect(),
            w_hat: SampleSummary::of(&traces.iter().map(|t| t.w_hat).collect::<Vec<_>>()),
            max_split_error: Some(traces.iter().map(|t| t.split_error).fold(0.0, f64::max)),
            max_rest_diff,
        })
    }

    /// Section for sampled paths without genealogy: `paths[i][k]` is
    /// `X_{t_k}(f)` of replicate `i`, `w_hat[i]` its terminal `X(h)`.
    pub fn from_paths(f_name: &str, paths: &[Vec<f64>], w_hat: &[f64]) -> Self {
        let len = paths.iter().map(Vec::len).max().unwrap_or(0);
        let column = |g: &dyn Fn(&[f64]) -> Option<f64>| {
            SampleSummary::of(&paths.iter().filter_map(|p| g(p)).collect::<Vec<_>>())
        };
        Self {
            f_name: f_name.to_string(),
            r: 0,
            r_selection: None,
            exact_subtree_law: false,
            replicates: paths.len(),
            increments: (0..len)
                .map(|n| column(&|p| if n == 0 { p.first().map(|_| 0.0) } else { p.get(n).map(|x| x - p[n - 1]) }))
                .collect(),
            values: (0..len).map(|n| column(&|p| p.get(n).copied())).collect(),
            w_hat: SampleSummary::of(w_hat),
            max_split_error: None,
            max_rest_diff: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionSection {
    pub a: Vec<f64>,
    pub fits: RegimeFits,
    pub series: SeriesCheck,
}

impl ContractionSection {
    pub fn new(p: &ContractionProfile, series: SeriesCheck) -> Self {
        Self { a: p.a.clone(), fits: p.fits, series }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub model: String,
    pub seed: u64,
    pub martingale: Vec<MartingaleSection>,
    pub lloglstat: Option<LlogLStats>,
    pub contraction: Option<ContractionSection>,
    pub verdicts: Vec<ConvergenceVerdict>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub replicate: usize,
    pub n: usize,
    pub x: f64,
    pub delta: f64,
    pub a: f64,
    pub b: f64,
}

pub fn trace_rows(traces: &[MartingaleTrace]) -> Vec<TraceRow> {
    traces
        .iter()
        .enumerate()
        .flat_map(|(replicate, t)| {
            (0..t.values.len()).map(move |n| TraceRow {
                replicate,
                n,
                x: t.values[n],
                delta: t.increments[n],
                a: t.a[n],
                b: t.b[n],
            })
        })
        .collect()
}

/// Per-generation CSV `f,replicate,n,x,delta,a,b`.
pub fn write_trace_csv<W: Write>(traces: &[MartingaleTrace], out: W) -> Result<(), DiagnosticsError> {
    let err = |e: csv::Error| DiagnosticsError::Export(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["f", "replicate", "n", "x", "delta", "a", "b"]).map_err(err)?;
    for (i, t) in traces.iter().enumerate() {
        for n in 0..t.values.len() {
            w.write_record([
                t.f_name.clone(),
                i.to_string(),
                n.to_string(),
                fmt17(t.values[n]),
                fmt17(t.increments[n]),
                fmt17(t.a[n]),
                fmt17(t.b[n]),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| DiagnosticsError::Export(e.to_string()))
}
