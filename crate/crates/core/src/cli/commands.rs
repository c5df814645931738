use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::config::Experiment;
use super::output::{to_json, write_bytes, write_json};
use crate::diagnostics::{
    lloglstat_continuous, lloglstat_discrete, martingale_trace, rest_term, select_r, write_trace_csv, ContractionSection,
    ConvergenceVerdict, DiagnosticsReport, MartingaleSection, MartingaleTrace, RSelection, SubtreeLaw, VerdictTolerances,
};
use crate::genealogy::{replicate_seed, PointMeasure};
use crate::models::{
    simulate_continuous, simulate_discrete, ContinuousOptions, ModelFamily, MultitypeGw, ScalarFn, SimulationCaps,
};
use crate::numerics::fmt17;
use crate::semigroup::{
    assemble, contraction_profile, default_grid, default_vstar, eigen_triplet, series_check, write_profile_csv,
    EigenOptions, EigenTriplet, ExpMethod, MatrixOperator, Step, TripletExport,
};
use crate::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("csv: {e}"))
}

fn gw(exp: &Experiment) -> Option<&MultitypeGw> {
    match &exp.spec.family {
        ModelFamily::MultitypeGw(m) => Some(m),
        _ => None,
    }
}

/// Operator over the configured step (one generation or unit time by
/// default) with its triplet.
pub fn operator(exp: &Experiment) -> Result<(MatrixOperator, EigenTriplet)> {
    let op = match gw(exp) {
        Some(m) => MatrixOperator::from_mean_matrix(m.mean_matrix(), exp.config.step.generations.unwrap_or(1))?,
        None => {
            let grid = default_grid(&exp.spec, exp.config.grid.n)?;
            let t = exp.config.step.time.unwrap_or(1.0);
            assemble(&exp.spec, &grid, Step::Time(t), ExpMethod::Auto)?
        }
    };
    let t = eigen_triplet(&op, EigenOptions::default())?;
    Ok((op, t))
}

fn vstar(exp: &Experiment, op: &MatrixOperator) -> Vec<f64> {
    match gw(exp) {
        Some(_) => vec![1.0; op.len()],
        None => default_vstar(&exp.spec, op.grid(), exp.config.diagnostics.vstar_p),
    }
}

pub fn simulate(exp: &Experiment, out: &Path) -> Result<()> {
    let c = &exp.config;
    let mut caps = exp.spec.caps.clone();
    caps.record_measures = false;
    let mut traj = csv::Writer::from_writer(Vec::new());
    let mut summary = csv::Writer::from_writer(Vec::new());
    if let Some(m) = gw(exp) {
        let n = c.diagnostics.blocks * c.step.generations.unwrap_or(1) as usize;
        let init = PointMeasure::dirac(c.initial as usize);
        let runs = (0..c.replicates)
            .into_par_iter()
            .map(|i| simulate_discrete(m, &init, n, &caps, replicate_seed(c.seed, i as u64)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let mut header = vec!["replicate".to_string(), "generation".into(), "population".into()];
        header.extend((0..m.n_types()).map(|k| format!("type_{k}")));
        traj.write_record(&header).map_err(csv_err)?;
        summary.write_record(["replicate", "generation", "population", "censored"]).map_err(csv_err)?;
        for (i, t) in runs.iter().enumerate() {
            let sizes = t.sizes();
            // rows stop at the first empty generation
            let last = sizes.iter().position(|s| *s == 0).unwrap_or(sizes.len() - 1);
            for g in 0..=last {
                let mut row = vec![i.to_string(), g.to_string(), sizes[g].to_string()];
                row.extend(t.type_counts[g].iter().map(u64::to_string));
                traj.write_record(&row).map_err(csv_err)?;
            }
            summary
                .write_record([i.to_string(), last.to_string(), sizes[last].to_string(), t.censored.to_string()])
                .map_err(csv_err)?;
        }
    } else {
        let model = exp.spec.continuous().expect("continuous family");
        let horizon = c.diagnostics.horizon;
        let opts = ContinuousOptions::uniform_grid(horizon, c.diagnostics.snapshots.max(1));
        let init = PointMeasure::dirac(c.initial);
        let runs = (0..c.replicates)
            .into_par_iter()
            .map(|i| simulate_continuous(model, &init, horizon, &caps, replicate_seed(c.seed, i as u64), &opts))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        traj.write_record(["replicate", "time", "population"]).map_err(csv_err)?;
        summary.write_record(["replicate", "time", "population", "censored"]).map_err(csv_err)?;
        for (i, t) in runs.iter().enumerate() {
            let last = t.snapshot_sizes.iter().position(|s| *s == 0).unwrap_or(t.snapshot_sizes.len().saturating_sub(1));
            for k in 0..t.snapshot_sizes.len().min(last + 1) {
                traj.write_record([i.to_string(), fmt17(t.snapshot_times[k]), t.snapshot_sizes[k].to_string()])
                    .map_err(csv_err)?;
            }
            let (time, pop) = match (&t.final_measure, t.censor_time) {
                (Some(m), _) => (horizon, m.len()),
                (None, Some(s)) => (s, t.snapshot_sizes.get(last).copied().unwrap_or(0)),
                (None, None) => (horizon, 0),
            };
            summary
                .write_record([i.to_string(), fmt17(time), pop.to_string(), t.censored.to_string()])
                .map_err(csv_err)?;
        }
    }
    write_bytes(&out.join("trajectories.csv"), &traj.into_inner().map_err(|e| Error::Config(e.to_string()))?)?;
    write_bytes(&out.join("summary.csv"), &summary.into_inner().map_err(|e| Error::Config(e.to_string()))?)
}

pub fn eigen(exp: &Experiment, out: &Path) -> Result<TripletExport> {
    let (op, t) = operator(exp)?;
    let doc = TripletExport::new(&op, &t);
    write_json(&out.join("eigen.json"), &doc)?;
    Ok(doc)
}

pub fn contract(exp: &Experiment, out: &Path) -> Result<ContractionSection> {
    let (op, t) = operator(exp)?;
    let p = contraction_profile(&op, &t, &vstar(exp, &op), exp.config.diagnostics.profile_n, None)?;
    let mut buf = Vec::new();
    write_profile_csv(&p, &mut buf)?;
    write_bytes(&out.join("profile.csv"), &buf)?;
    let section = ContractionSection::new(&p, series_check(&p));
    write_json(&out.join("contract.json"), &section)?;
    Ok(section)
}

pub fn diagnose(exp: &Experiment, out: &Path) -> Result<DiagnosticsReport> {
    let d = &exp.config.diagnostics;
    let tol = VerdictTolerances { z: d.z, alpha: d.alpha };
    let mut report = DiagnosticsReport {
        model: exp.spec.name.clone(),
        seed: exp.config.seed,
        martingale: Vec::new(),
        lloglstat: None,
        contraction: None,
        verdicts: Vec::new(),
    };
    let (op1, t1) = operator(exp)?;
    let vs = vstar(exp, &op1);
    if d.contraction {
        let p = contraction_profile(&op1, &t1, &vs, d.profile_n, None)?;
        report.contraction = Some(ContractionSection::new(&p, series_check(&p)));
    }
    match gw(exp) {
        Some(m) => diagnose_discrete(exp, m, &op1, &t1, &vs, tol, &mut report, out)?,
        None => diagnose_continuous(exp, &op1, &t1, tol, &mut report)?,
    }
    write_json(&out.join("diagnostics.json"), &report)?;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn diagnose_discrete(
    exp: &Experiment,
    m: &MultitypeGw,
    op1: &MatrixOperator,
    t1: &EigenTriplet,
    vs: &[f64],
    tol: VerdictTolerances,
    report: &mut DiagnosticsReport,
    out: &Path,
) -> Result<()> {
    let c = &exp.config;
    let d = &c.diagnostics;
    let k = m.n_types();
    let v = d.v.clone().unwrap_or_else(|| vec![1.0; k]);
    if v.len() != k {
        return Err(Error::Config(format!("diagnostics.v has {} entries for {k} types", v.len())));
    }
    let x0 = c.initial as usize;
    if d.llogl {
        let probes: Vec<usize> = match &d.probes {
            Some(p) => p.iter().map(|x| *x as usize).collect(),
            None => (0..k).collect(),
        };
        let steps: Vec<usize> = d.llogl_steps.iter().map(|s| *s as usize).collect();
        let reps = d.llogl_replicates.unwrap_or(c.replicates);
        let s = lloglstat_discrete(m, &v, vs, &probes, &steps, reps, exp.spec.caps.n_cap as u64, replicate_seed(c.seed, u64::MAX))?;
        report.lloglstat = Some(s);
    }
    if !(d.martingale || d.verdicts) {
        return Ok(());
    }
    let (r, selection): (u32, Option<RSelection>) = match exp.step() {
        Some(Step::Generations(r)) => (r, None),
        _ => {
            let s = select_r(op1, t1, vs, d.r_max, d.r_threshold)?;
            (s.r as u32, Some(s))
        }
    };
    let op = MatrixOperator::from_mean_matrix(m.mean_matrix(), r)?;
    let t = eigen_triplet(&op, EigenOptions::default())?;
    let fs: Vec<(String, Vec<f64>)> = exp
        .functionals
        .iter()
        .map(|(name, f)| (name.clone(), (0..k).map(|x| f.eval(x as f64, &|y| t.h[y as usize])).collect()))
        .collect();
    let laws = fs
        .iter()
        .enumerate()
        .map(|(j, (_, f))| SubtreeLaw::for_model(m, r, f, &v, replicate_seed(c.seed ^ 0x5eed, j as u64)))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let n = d.blocks * r as usize;
    let init = PointMeasure::dirac(x0);
    let mut caps = exp.spec.caps.clone();
    caps.record_measures = true;
    type PerReplicate = Vec<(MartingaleTrace, f64)>;
    let per: Vec<PerReplicate> = (0..c.replicates)
        .into_par_iter()
        .map(|i| -> Result<PerReplicate> {
            let traj = simulate_discrete(m, &init, n, &caps, replicate_seed(c.seed, i as u64))?;
            fs.iter()
                .zip(&laws)
                .map(|((name, f), law)| {
                    let tr = martingale_trace(&traj, &op, &t, f, name, &v, law)?;
                    let rt = rest_term(&traj, &op, &t, f)?;
                    Ok((tr, rt.max_rel_diff))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut all = Vec::new();
    for (j, (_, f)) in fs.iter().enumerate() {
        let traces: Vec<MartingaleTrace> = per.iter().map(|p| p[j].0.clone()).collect();
        let rest = per.iter().map(|p| p[j].1).fold(0.0, f64::max);
        if d.martingale {
            report.martingale.push(MartingaleSection::new(&traces, laws[j].is_exact(), selection.clone(), Some(rest))?);
        }
        if d.verdicts {
            report.verdicts.push(ConvergenceVerdict::from_traces(&traces, t.gamma_of(f), t.h[x0], tol)?);
        }
        all.extend(traces);
    }
    let mut buf = Vec::new();
    write_trace_csv(&all, &mut buf)?;
    write_bytes(&out.join("traces.csv"), &buf)
}

fn diagnose_continuous(
    exp: &Experiment,
    op: &MatrixOperator,
    t: &EigenTriplet,
    tol: VerdictTolerances,
    report: &mut DiagnosticsReport,
) -> Result<()> {
    let c = &exp.config;
    let d = &c.diagnostics;
    let model = exp.spec.continuous().expect("continuous family");
    let grid = op.grid();
    let h = |x: f64| grid.interpolate(&t.h, x);
    if d.llogl {
        let probes = d.probes.clone().unwrap_or_else(|| vec![c.initial]);
        let reps = d.llogl_replicates.unwrap_or(c.replicates);
        let vstar_fn = ScalarFn::Poly { coeffs: vstar_poly(d.vstar_p) };
        let s = lloglstat_continuous(
            model,
            &ScalarFn::constant(1.0),
            &vstar_fn,
            &probes,
            &d.llogl_steps,
            reps,
            &exp.spec.caps,
            replicate_seed(c.seed, u64::MAX),
        )?;
        report.lloglstat = Some(s);
    }
    if !(d.martingale || d.verdicts) {
        return Ok(());
    }
    let opts = ContinuousOptions::uniform_grid(d.horizon, d.snapshots.max(1));
    let mut caps: SimulationCaps = exp.spec.caps.clone();
    caps.record_measures = true;
    let init = PointMeasure::dirac(c.initial);
    let fs = &exp.functionals;
    // paths[i] = Some(per functional X_{t_k}(f), plus X_{t_k}(h) last)
    let paths: Vec<Option<Vec<Vec<f64>>>> = (0..c.replicates)
        .into_par_iter()
        .map(|i| -> Result<Option<Vec<Vec<f64>>>> {
            let traj = simulate_continuous(model, &init, d.horizon, &caps, replicate_seed(c.seed, i as u64), &opts)?;
            if traj.censored {
                return Ok(None);
            }
            let series = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
                traj.snapshots.iter().zip(&traj.snapshot_times).map(|(m, s)| (-t.rate * s).exp() * m.sum(|x| f(*x))).collect()
            };
            let mut out: Vec<Vec<f64>> = fs.iter().map(|(_, f)| series(&|x| f.eval(x, &h))).collect();
            out.push(series(&h));
            Ok(Some(out))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<&Vec<Vec<f64>>> = paths.iter().flatten().collect();
    if kept.is_empty() {
        return Err(Error::Diagnostics(crate::diagnostics::DiagnosticsError::Input("every replicate was censored".into())));
    }
    let w_hat: Vec<f64> = kept.iter().map(|p| *p[fs.len()].last().expect("snapshots")).collect();
    for (j, (name, f)) in fs.iter().enumerate() {
        let xs: Vec<Vec<f64>> = kept.iter().map(|p| p[j].clone()).collect();
        if d.martingale {
            report.martingale.push(MartingaleSection::from_paths(name, &xs, &w_hat));
        }
        if d.verdicts {
            let gamma_f = t.gamma_of(&f.on_grid(grid, &t.h));
            let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
            report.verdicts.push(crate::diagnostics::convergence_verdict(name, &refs, &w_hat, gamma_f, h(c.initial), tol)?);
        }
    }
    Ok(())
}

/// Coefficients of `1 + x^p` for integer `p`, else `1 + x^2`.
fn vstar_poly(p: f64) -> Vec<f64> {
    let k = if p >= 0.0 && p.fract() == 0.0 && p <= 16.0 { p as usize } else { 2 };
    let mut c = vec![0.0; k + 1];
    c[0] += 1.0;
    c[k] += 1.0;
    c
}

/// One identity of the oracle suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let pass = (value - expected).abs() <= tolerance;
        Self { name: name.into(), value, expected, tolerance, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

/// Self-contained oracle suite over the shipped tiny models and analytic constants.
pub fn verify(out: Option<&Path>) -> Result<VerifyReport> {
    use crate::oracle::{alpha_p, dense_perron, house_of_cards_rate, TinyModel};
    let mut checks = Vec::new();
    for (name, m) in TinyModel::catalogue() {
        let k = m.n_types();
        let f: Vec<f64> = (0..k).map(|i| 1.0 + i as f64).collect();
        for n in 0..=4 {
            let mf = m.mean_power(&f, n);
            for (x0, expected) in mf.iter().enumerate() {
                let e = m.exact_expectation(x0, n, |c| c.iter().zip(&f).map(|(c, w)| *c as f64 * w).sum())?;
                checks.push(Check::new(format!("{name}: E Z_{n}(f) from type {x0}"), e.value, *expected, 1e-12 * expected.max(1.0)));
            }
        }
        for x0 in 0..k {
            let a = m.exact_distribution(x0, 3)?;
            let b = m.convolution_distribution(x0, 3)?;
            let keys = a.len() == b.len() && a.keys().zip(b.keys()).all(|(p, q)| p == q);
            let diff = if keys { a.values().zip(b.values()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max) } else { f64::INFINITY };
            checks.push(Check::new(format!("{name}: law of Z_3 from type {x0}, trees vs convolution"), diff, 0.0, 1e-12));
        }
        let mean = m.mean_matrix();
        let op = MatrixOperator::from_mean_matrix(&mean, 1)?;
        if let (Ok(it), Ok(dense)) = (eigen_triplet(&op, EigenOptions::default()), dense_perron(op.matrix())) {
            checks.push(Check::new(format!("{name}: lambda, power iteration vs dense"), it.lambda, dense.triplet.lambda, 1e-9));
            let dh = it.h.iter().zip(&dense.triplet.h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            checks.push(Check::new(format!("{name}: h, power iteration vs dense"), dh, 0.0, 1e-8));
        }
    }
    let two = MatrixOperator::from_mean_matrix(&[vec![1.0, 2.0], vec![1.0, 0.0]], 1)?;
    let t = eigen_triplet(&two, EigenOptions::default())?;
    checks.push(Check::new("[[1,2],[1,0]]: lambda", t.lambda, 2.0, 1e-10));
    let sym = MatrixOperator::from_mean_matrix(&[vec![1.0, 1.0], vec![1.0, 1.0]], 1)?;
    let t = eigen_triplet(&sym, EigenOptions::default())?;
    checks.push(Check::new("[[1,1],[1,1]]: lambda", t.lambda, 2.0, 1e-10));
    checks.push(Check::new("[[1,1],[1,1]]: gamma_0", t.gamma[0], 0.5, 1e-10));
    let rate = house_of_cards_rate(|x| 1.0 - x, 1.0, 20_000)?;
    checks.push(Check::new("house of cards alpha = 1 - x: rate", rate, 1.0 / (std::f64::consts::E - 1.0), 1e-9));
    let a2 = alpha_p(&crate::models::FragmentLaw::Uniform, 2.0, 10_000)?;
    checks.push(Check::new("uniform split: alpha_2", a2, 1.0 / 3.0, 1e-10));
    checks.push(Check::new("log*(e)", crate::numerics::log_star(std::f64::consts::E), 1.0, 1e-15));
    let bd = crate::models::BranchingDiffusion::brownian(0.0, 1.0, 1.0, 6.0, crate::models::CountLawSpec::fixed(2))?;
    let kb = crate::models::kloglk_bound(&bd, &[0.25, 0.5, 0.75]).value.unwrap_or(f64::NAN);
    checks.push(Check::new("binary branching at rate 6: klogk bound", kb, 12.0 * 2f64.ln(), 0.0));
    let failed = checks.iter().filter(|c| !c.pass).count();
    let report = VerifyReport { passed: checks.len() - failed, failed, checks };
    if let Some(dir) = out {
        write_json(&dir.join("verify.json"), &report)?;
    }
    Ok(report)
}

/// Aggregates the JSON artifacts found in `out`.
pub fn report(out: &Path) -> Result<serde_json::Value> {
    let mut doc = serde_json::Map::new();
    for name in ["eigen", "contract", "diagnostics", "verify"] {
        let p = out.join(format!("{name}.json"));
        if p.exists() {
            let text = std::fs::read_to_string(&p)?;
            let v: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            doc.insert(name.to_string(), v);
        }
    }
    let v = serde_json::Value::Object(doc);
    std::fs::write(out.join("report.json"), to_json(&v)?)?;
    Ok(v)
}
