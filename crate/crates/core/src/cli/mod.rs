//! Configuration-driven experiment runner behind the `branchkit` binary.
//!
//! Exit codes: 0 on success, 1 when `verify` finds a failed identity, 2 for
//! an invalid command line or configuration, 3 for numerical failures.

mod commands;
mod config;
mod output;

pub use commands::{contract, diagnose, eigen, operator, report, simulate, verify, Check, VerifyReport};
pub use config::{
    DiagnosticsConfig, Experiment, ExperimentConfig, Functional, FunctionalConfig, FunctionalKind, GridConfig,
    StepConfig,
};
pub use output::{to_json, write_json};

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "branchkit", version, about = "Branching process simulation and spectral diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true, env = "BRANCHKIT_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, env = "BRANCHKIT_SEED")]
    pub seed: Option<u64>,
    #[arg(long, global = true, env = "BRANCHKIT_REPLICATES")]
    pub replicates: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "BRANCHKIT_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, env = "BRANCHKIT_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate trajectories and write `trajectories.csv` and `summary.csv`.
    Simulate,
    /// Write the eigen-triplet as `eigen.json`.
    Eigen,
    /// Write the contraction profile (`profile.csv`) and the series verdict (`contract.json`).
    Contract,
    /// Write the full diagnostics report (`diagnostics.json`, `traces.csv`).
    Diagnose,
    /// Run the oracle suite; exit 1 if any identity fails.
    Verify,
    /// Aggregate the JSON artifacts of the output directory into `report.json`.
    Report,
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ => 3,
    }
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    let load = || -> Result<Experiment, Error> {
        let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
        let mut exp = ExperimentConfig::load(path)?;
        if let Some(s) = cli.seed {
            exp.config.seed = s;
        }
        if let Some(r) = cli.replicates {
            if r == 0 {
                return Err(Error::Config("--replicates must be positive".into()));
            }
            exp.config.replicates = r;
        }
        if let Some(o) = &cli.out {
            exp.config.out = o.clone();
        }
        Ok(exp)
    };
    let prepare = |dir: &PathBuf| -> Result<(), Error> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
    };
    match cli.command {
        Command::Verify => {
            let out = cli.out.clone();
            if let Some(d) = &out {
                prepare(d)?;
            }
            let r = verify(out.as_deref())?;
            for c in &r.checks {
                println!("{} {}", if c.pass { "pass" } else { "FAIL" }, c.name);
            }
            println!("{} passed, {} failed", r.passed, r.failed);
            Ok(i32::from(r.failed > 0))
        }
        Command::Report => {
            let out = match &cli.out {
                Some(o) => o.clone(),
                None => load()?.config.out,
            };
            report(&out)?;
            Ok(0)
        }
        cmd => {
            let exp = load()?;
            let out = exp.config.out.clone();
            prepare(&out)?;
            match cmd {
                Command::Simulate => simulate(&exp, &out)?,
                Command::Eigen => {
                    let t = eigen(&exp, &out)?;
                    eprintln!("lambda = {}", t.lambda);
                }
                Command::Contract => {
                    let s = contract(&exp, &out)?;
                    eprintln!("series: {:?}", s.series.verdict);
                }
                Command::Diagnose => {
                    diagnose(&exp, &out)?;
                }
                Command::Verify | Command::Report => unreachable!(),
            }
            Ok(0)
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Error::Config("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(Error::Config(format!("thread pool: {e}"))),
        },
        None => execute(&cli),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
