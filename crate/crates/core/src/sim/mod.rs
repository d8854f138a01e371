//! Scenarios, bounded noise, attack injection, deterministic closed-loop runs
//! and tail metrics.

mod attack;
mod metrics;
mod noise;
pub mod random;
mod scenario;

pub use attack::{inject_attack, AttackKind, AttackSpec};
pub use metrics::{compute_metrics, Summary, TailWindow};
pub use noise::{gen_noise, NoiseStream};
pub use scenario::{
    build_platoon, plan_with, resolve_measure, run_scenario, simulate, BlockedAttack, DesiredState, EstimatorSpec,
    MeasureSource, ScenarioConfig, ScenarioOutcome, Trace, TraceRecord,
};
