use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

use super::analysis::{SecurityAnalysis, SecurityIndex};
use super::enumerate::{costs_equal, enumerate_budget_feasible, maxmin_phi, tie_break};
use super::measure::{budget_slack, CostModel, SecurityMeasure};
use super::simplex::solve_relaxed_security_lp;

/// Largest agent count accepted by the exhaustive planner.
pub const MAX_BRUTE_FORCE_AGENTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanAlgorithm {
    BruteForce,
    Efficient,
}

impl PlanAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            PlanAlgorithm::BruteForce => "bruteforce",
            PlanAlgorithm::Efficient => "efficient",
        }
    }
}

/// Which stage produced the plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStage {
    /// A budget-feasible measure with no undetectable attack was found.
    Detectable,
    /// No such measure exists; the index was maximized instead.
    MaxIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecurityPlan {
    pub measure: SecurityMeasure,
    pub index: SecurityIndex,
    pub cost: f64,
    pub algorithm: PlanAlgorithm,
    pub stage: PlanStage,
    /// Basis position of the mode attaining a finite index.
    pub certificate: Option<usize>,
}

fn indicator_of(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Ordering used to pick the better of two candidates: higher index, then lower
/// cost, then [`tie_break`].
fn prefer(a: (SecurityIndex, f64, &[bool]), b: (SecurityIndex, f64, &[bool])) -> Ordering {
    a.0.cmp(&b.0).then_with(|| {
        if costs_equal(a.1, b.1) {
            tie_break(a.2, b.2)
        } else {
            b.1.total_cmp(&a.1)
        }
    })
}

/// Exhaustive search over all `2^N` measures.
pub fn brute_force_plan(analysis: &SecurityAnalysis<'_>, costs: &CostModel) -> Result<SecurityPlan> {
    let n = analysis.system().agent_count();
    check_costs(costs, n)?;
    if n > MAX_BRUTE_FORCE_AGENTS {
        return Err(Error::TooManyAgents(n));
    }
    let limit = costs.budget() + budget_slack(costs.budget());
    let mut affordable: Vec<(Vec<bool>, f64)> = Vec::new();
    for mask in 0..1u64 << n {
        let b = indicator_of(mask, n);
        let cost = costs.total_cost(&SecurityMeasure::from_indicator(&b))?;
        if cost <= limit {
            affordable.push((b, cost));
        }
    }

    let mut best: Option<(&[bool], f64)> = None;
    for (b, cost) in &affordable {
        let secure: Vec<usize> = (0..n).filter(|&i| b[i]).collect();
        if !analysis.is_detectable(&secure) {
            continue;
        }
        let better = match best {
            None => true,
            Some((pb, pc)) => {
                prefer((SecurityIndex::Infinite, *cost, b), (SecurityIndex::Infinite, pc, pb)) == Ordering::Greater
            }
        };
        if better {
            best = Some((b, *cost));
        }
    }
    if let Some((b, cost)) = best {
        return Ok(SecurityPlan {
            measure: SecurityMeasure::from_indicator(b),
            index: SecurityIndex::Infinite,
            cost,
            algorithm: PlanAlgorithm::BruteForce,
            stage: PlanStage::Detectable,
            certificate: None,
        });
    }

    let mut best: Option<(&[bool], f64, SecurityIndex, Option<usize>)> = None;
    for (b, cost) in &affordable {
        let report = analysis.security_index(&SecurityMeasure::from_indicator(b))?;
        let better = match best {
            None => true,
            Some((pb, pc, pi, _)) => prefer((report.index, *cost, b), (pi, pc, pb)) == Ordering::Greater,
        };
        if better {
            best = Some((b, *cost, report.index, report.certificate));
        }
    }
    let (b, cost, index, certificate) = best.ok_or(Error::EmptyFeasibleSet)?;
    Ok(SecurityPlan {
        measure: SecurityMeasure::from_indicator(b),
        index,
        cost,
        algorithm: PlanAlgorithm::BruteForce,
        stage: PlanStage::MaxIndex,
        certificate,
    })
}

/// LP relaxation first; if its integral optimum exceeds the budget, enumerate
/// budget-feasible indicators and take the max-min score over the incidence matrix.
pub fn efficient_plan(analysis: &SecurityAnalysis<'_>, costs: &CostModel) -> Result<SecurityPlan> {
    let n = analysis.system().agent_count();
    check_costs(costs, n)?;
    let h = analysis.incidence_matrix();
    let relaxed = solve_relaxed_security_lp(&h, costs)?;
    let measure = SecurityMeasure::from_indicator(&relaxed.indicator);
    let cost = costs.total_cost(&measure)?;
    if cost <= costs.budget() + budget_slack(costs.budget()) {
        return Ok(SecurityPlan {
            measure,
            index: SecurityIndex::Infinite,
            cost,
            algorithm: PlanAlgorithm::Efficient,
            stage: PlanStage::Detectable,
            certificate: None,
        });
    }

    let feasible: Vec<Vec<bool>> = enumerate_budget_feasible(costs)?.collect();
    let choice = maxmin_phi(&h, &feasible, costs)?;
    let measure = SecurityMeasure::from_indicator(&choice.indicator);
    let cost = costs.total_cost(&measure)?;
    let certificate = analysis.security_index(&measure)?.certificate;
    Ok(SecurityPlan {
        measure,
        index: choice.alpha,
        cost,
        algorithm: PlanAlgorithm::Efficient,
        stage: PlanStage::MaxIndex,
        certificate,
    })
}

fn check_costs(costs: &CostModel, n: usize) -> Result<()> {
    if costs.agent_count() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "cost model has {} agents, system has {n}",
            costs.agent_count()
        )));
    }
    costs.check_budget()
}
