use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("communication graph is disconnected (lambda2 = {lambda2:e})")]
    DisconnectedGraph { lambda2: f64 },

    #[error("the lifted pair (A, C) is not detectable")]
    UndetectablePair,

    #[error("eigen decomposition failed: {0}")]
    EigenFailure(String),

    #[error("no undetectable attack exists for the given security measure")]
    NoUndetectableAttack,

    #[error("matrix exceeds the exhaustive total-unimodularity test cap ({rows}x{cols})")]
    MatrixTooLargeForExactTest { rows: usize, cols: usize },

    #[error("covering LP is infeasible: incidence row {row} has no nonzero entry")]
    Infeasible { row: usize },

    #[error("LP vertex is fractional; fall back to the brute-force planner")]
    NonIntegralVertex { vertex: Vec<f64> },

    #[error("polynomial-delay enumeration requires costs common to all agents")]
    RequiresCommonCosts,

    #[error("budget {budget} cannot pay the all-normal cost {base}")]
    InfeasibleBudget { budget: f64, base: f64 },

    #[error("feasible indicator set is empty")]
    EmptyFeasibleSet,

    #[error("too many agents for exhaustive search: {0}")]
    TooManyAgents(usize),

    #[error("secure set is empty")]
    EmptySecureSet,

    #[error("estimation hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("gain hypothesis violated: ||A - B Kp|| = {norm} >= 1")]
    GainHypothesisViolated { norm: f64 },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("no usable security plan: {0}")]
    PlanInfeasible(String),
}

pub type Result<T> = core::result::Result<T, Error>;
