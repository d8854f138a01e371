//! Property checks on a single scenario.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use secest_core::security::{
    brute_force_plan, check_max_resilience, efficient_plan, is_totally_unimodular, solve_relaxed_security_lp,
    SecurityAnalysis, MAX_BRUTE_FORCE_AGENTS,
};
use secest_core::sim::{run_scenario, MeasureSource, ScenarioConfig};
use secest_core::Error;

use crate::report::{CheckReport, CheckStatus};

const EXHAUSTIVE_SUBSETS_UP_TO: usize = 14;
const SAMPLED_SUBSETS: usize = 4096;
const INTEGRALITY_TOL: f64 = 1e-6;
const BOUND_SLACK: f64 = 1e-6;

fn report(name: &'static str, status: CheckStatus, detail: impl Into<String>) -> CheckReport {
    CheckReport {
        name,
        status,
        detail: detail.into(),
    }
}

/// Incidence-matrix covering against the direct detectability test, over every
/// secure set (or a seeded sample for large `N`).
fn covering_equivalence(an: &SecurityAnalysis<'_>, seed: u64) -> CheckReport {
    let n = an.system().agent_count();
    let h = an.incidence_matrix();
    let sets: Vec<Vec<bool>> = if n <= EXHAUSTIVE_SUBSETS_UP_TO {
        (0u64..1 << n)
            .map(|mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..SAMPLED_SUBSETS)
            .map(|_| (0..n).map(|_| rng.random_bool(0.5)).collect())
            .collect()
    };
    for b in &sets {
        let secure: Vec<usize> = (0..n).filter(|&i| b[i]).collect();
        match check_max_resilience(&h, b) {
            Ok(covered) if covered == an.is_detectable(&secure) => {}
            Ok(covered) => {
                return report(
                    "covering_equivalence",
                    CheckStatus::Fail,
                    format!("secure set {secure:?}: covering says {covered}, detectability disagrees"),
                )
            }
            Err(e) => return report("covering_equivalence", CheckStatus::Fail, e.to_string()),
        }
    }
    report(
        "covering_equivalence",
        CheckStatus::Pass,
        format!("{} secure sets", sets.len()),
    )
}

fn planner_oracle(an: &SecurityAnalysis<'_>, config: &ScenarioConfig) -> CheckReport {
    const NAME: &str = "planner_oracle";
    let Some(costs) = &config.costs else {
        return report(NAME, CheckStatus::Skipped, "no cost model");
    };
    if an.system().agent_count() > MAX_BRUTE_FORCE_AGENTS {
        return report(NAME, CheckStatus::Skipped, "too many agents for brute force");
    }
    let brute = match brute_force_plan(an, costs) {
        Ok(p) => p,
        Err(e) => return report(NAME, CheckStatus::Skipped, format!("brute force: {e}")),
    };
    match efficient_plan(an, costs) {
        Ok(eff) if eff.index == brute.index && (eff.cost - brute.cost).abs() <= 1e-9 * brute.cost.abs().max(1.0) => {
            report(
                NAME,
                CheckStatus::Pass,
                format!("index {}, cost {}", brute.index, brute.cost),
            )
        }
        Ok(eff) => report(
            NAME,
            CheckStatus::Fail,
            format!(
                "brute force {} / {} vs efficient {} / {}",
                brute.index, brute.cost, eff.index, eff.cost
            ),
        ),
        Err(
            e @ (Error::NonIntegralVertex { .. }
            | Error::RequiresCommonCosts
            | Error::MatrixTooLargeForExactTest { .. }),
        ) => report(
            NAME,
            CheckStatus::Skipped,
            format!("efficient planner not applicable: {e}"),
        ),
        Err(e) => report(NAME, CheckStatus::Fail, format!("efficient planner: {e}")),
    }
}

fn lp_integrality(an: &SecurityAnalysis<'_>, config: &ScenarioConfig) -> CheckReport {
    const NAME: &str = "lp_integrality";
    let Some(costs) = &config.costs else {
        return report(NAME, CheckStatus::Skipped, "no cost model");
    };
    let h = an.incidence_matrix();
    match is_totally_unimodular(h.matrix()) {
        Ok(true) => {}
        Ok(false) => return report(NAME, CheckStatus::Skipped, "incidence matrix is not totally unimodular"),
        Err(e) => return report(NAME, CheckStatus::Skipped, e.to_string()),
    }
    match solve_relaxed_security_lp(&h, costs) {
        Ok(sol) => match sol
            .vertex
            .iter()
            .find(|v| v.abs().min((1.0 - **v).abs()) > INTEGRALITY_TOL)
        {
            Some(v) => report(NAME, CheckStatus::Fail, format!("fractional vertex entry {v}")),
            None => {
                let phi: String = sol.indicator.iter().map(|&b| if b { 'S' } else { 'N' }).collect();
                report(
                    NAME,
                    CheckStatus::Pass,
                    format!("vertex {:?}, refined plan {phi}", sol.vertex),
                )
            }
        },
        Err(e) => report(NAME, CheckStatus::Fail, e.to_string()),
    }
}

fn bound_adherence(config: &ScenarioConfig) -> CheckReport {
    const NAME: &str = "bound_adherence";
    if matches!(config.measure, MeasureSource::Plan { .. }) && config.costs.is_none() {
        return report(NAME, CheckStatus::Skipped, "no security measure and no cost model");
    }
    let out = match run_scenario(config) {
        Ok(out) => out,
        Err(e) => return report(NAME, CheckStatus::Skipped, format!("scenario not runnable: {e}")),
    };
    if !(out.bounds.stable && out.extended_stable) {
        return report(
            NAME,
            CheckStatus::Skipped,
            "bound hypotheses do not hold for this instance",
        );
    }
    let s = &out.summary;
    let est_ok = s.max_est_err_tail <= out.bounds.est_bound + BOUND_SLACK;
    let ctrl_ok = s.max_ctrl_err_tail <= out.bounds.ctrl_bound + BOUND_SLACK;
    let detail = format!(
        "tail estimation {:.6e} vs {:.6e}, tail control {:.6e} vs {:.6e}",
        s.max_est_err_tail, out.bounds.est_bound, s.max_ctrl_err_tail, out.bounds.ctrl_bound
    );
    let status = if est_ok && ctrl_ok {
        CheckStatus::Pass
    } else {
        CheckStatus::Fail
    };
    report(NAME, status, detail)
}

pub fn verify(config: &ScenarioConfig, an: &SecurityAnalysis<'_>) -> Vec<CheckReport> {
    vec![
        covering_equivalence(an, config.seed),
        planner_oracle(an, config),
        lp_integrality(an, config),
        bound_adherence(config),
    ]
}
