//! Restless multi-armed bandits whose arms follow local Markov chains
//! selected by an exogenous global Markov chain.
//!
//! The crate provides chain analysis ([`markov`]), scenario models and the
//! built-in presets, a seeded slot-level simulator ([`environment`]), the
//! online estimators, the LEMP policy with its baselines ([`policy`]), the
//! closed-form constants and regret bound ([`theory`]) and a Monte Carlo
//! harness ([`harness`]).

pub mod environment;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod markov;
pub mod policy;
pub mod presets;
pub mod scenario;
pub mod theory;

pub use environment::{EnvState, InitMode, LocalStateId, Observation};
pub use error::{ChainError, EnvError, Error, ModelError, PolicyError, Result, TheoryError};
pub use estimators::{CountTables, EstimateView, RateParams};
pub use harness::{
    run_monte_carlo, run_single, AggregateResult, Experiment, ExperimentReport, ExperimentSpec, PolicyAggregate,
    RunResult,
};
pub use markov::{ChainAnalysis, Spectrum, StochasticMatrix};
pub use policy::{make_policy, DecisionContext, LempConfig, Policy, PolicyKind};
pub use scenario::{LocalChain, Scenario, ScenarioModel, SwitchMode, TrueValues};
pub use theory::{compute_constants, BoundReport, SystemConstants};
