//! Declarative branching models and their simulators.
//!
//! The catalogue has one discrete-time family ([`MultitypeGw`]) and three
//! continuous-time families with real traits ([`HouseOfCards`],
//! [`GrowthFragmentation`], [`BranchingDiffusion`]), all of which implement
//! [`ContinuousModel`] and run through the same thinning simulator.

mod continuous;
mod discrete;
mod drift;
mod func;
mod offspring;
mod spec;

pub use continuous::{
    first_branch_time, flow, run_life, simulate_continuous, CensorReason, ContinuousOptions, ContinuousTrajectory,
    EventKind, EventRecord, FirstBranch, LifeEnd,
};
pub use discrete::{simulate_counts, simulate_discrete, DiscreteTrajectory, GenerationRow};
pub use drift::{
    check_drift, kloglk_bound, kloglk_series, measure_ratio, singleton_ratio, DriftPart, DriftReport, DriftVerdict,
    KLogKBound,
};
pub use func::ScalarFn;
pub use offspring::{CountLaw, CountLawSpec, FragmentLaw, Outcome, TypeLaw, DEFAULT_K_MAX};
pub use spec::{
    BranchingDiffusion, BranchingDiffusionSpec, ContinuousModel, GrowthFragmentation, GrowthFragmentationSpec,
    HouseOfCards, HouseOfCardsSpec, KnownTriplet, ModelFamily, ModelSpec, Motion, MultitypeGw, MultitypeGwSpec,
    SimulationCaps, TimeMode, WeightedOutcome,
};

use thiserror::Error;

use crate::genealogy::GenealogyError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),
    #[error("invalid model: {0}")]
    InvalidSpec(String),
    #[error("outside the trait domain: {0}")]
    Domain(String),
    #[error("rate not bounded on sublevel set {cell} = [{lo}, {hi}]")]
    RateUnbounded { cell: usize, lo: f64, hi: f64 },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Genealogy(#[from] GenealogyError),
}
