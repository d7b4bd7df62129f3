use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("transition matrix has no states")]
    Empty,
    #[error("row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("entry ({row}, {col}) = {value} is not a probability")]
    InvalidEntry { row: usize, col: usize, value: f64 },
    #[error("RowNotStochastic: row {row} sums to {sum}")]
    RowNotStochastic { row: usize, sum: f64 },
    #[error("Reducible: state {state} is not mutually reachable with state 0")]
    Reducible { state: usize },
    #[error("Periodic: chain has period {period}")]
    Periodic { period: usize },
    #[error("NumericalFailure: {0}")]
    NumericalFailure(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("global chain: {0}")]
    Global(ChainError),
    #[error("arm {arm}, global state {state}: {source}")]
    Local {
        arm: usize,
        state: usize,
        source: ChainError,
    },
    #[error("scenario has no arms")]
    NoArms,
    #[error("arm {arm} describes {got} global states, the global chain has {expected}")]
    StateCount { arm: usize, got: usize, expected: usize },
    #[error("arm {arm}, global state {state}: {got} rewards for {expected} local states")]
    RewardCount {
        arm: usize,
        state: usize,
        got: usize,
        expected: usize,
    },
    #[error("arm {arm}, global state {state}: reward {value} is not strictly positive")]
    NonPositiveReward { arm: usize, state: usize, value: f64 },
    #[error("index-carryover needs equal local state counts across global states (arm {arm})")]
    CarryoverCardinality { arm: usize },
    #[error("invalid scenario file: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("InvalidArm: arm {arm} out of range for {arms} arms")]
    InvalidArm { arm: usize, arms: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolicyError {
    #[error("ProtocolViolation: {0}")]
    ProtocolViolation(String),
    #[error("unknown policy {0:?}")]
    UnknownPolicy(String),
    #[error("invalid policy configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("DegenerateGap: global state {state} has arms {first} and {second} tied at the top")]
    DegenerateGap { state: usize, first: usize, second: usize },
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
}

/// Crate-wide error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("AssertionFailure at t = {t} ({policy}): {invariant}")]
    AssertionFailure {
        policy: String,
        t: u64,
        invariant: String,
    },
    #[error("run {run} failed: {source}")]
    Run { run: usize, source: Box<Error> },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
