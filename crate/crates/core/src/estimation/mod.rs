//! Distributed resilient estimation and observer-based control, parameter
//! design and error bounds.

mod estimator;
mod extended;
mod params;

pub use estimator::{
    consensus, control_input, initial_states, input_fusion, step_estimator, AgentEstimatorState, FusedInputs,
};
pub use extended::{build_extended_error_system, ExtendedErrorSystem};
pub use params::{
    check_gain, consensus_rounds_for, control_error_bound, design_omega, design_params, error_bounds,
    estimation_error_bound, gamma_perp, min_consensus_rounds, secure_norms, ConsensusRounds, ErrorBounds,
    EstimatorParams, GainCheck,
};
