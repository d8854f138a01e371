//! Security index, detectability, undetectable-attack synthesis and placement
//! of security measures under a budget.

mod analysis;
mod enumerate;
mod incidence;
mod measure;
mod planner;
pub mod simplex;
mod unimodular;

pub use analysis::{AnalysisOptions, IndexReport, ModeFilter, SecurityAnalysis, SecurityIndex, UndetectableAttack};
pub use enumerate::{enumerate_budget_feasible, maxmin_phi, next_combination, BudgetFeasible, PhiChoice};
pub use incidence::{check_max_resilience, IncidenceMatrix};
pub use measure::{AgentType, CostModel, SecurityMeasure};
pub use planner::{brute_force_plan, efficient_plan, PlanAlgorithm, PlanStage, SecurityPlan, MAX_BRUTE_FORCE_AGENTS};
pub use simplex::{solve_relaxed_security_lp, RelaxedSolution};
pub use unimodular::{is_totally_unimodular, is_totally_unimodular_with, TuOptions};
