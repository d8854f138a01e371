//! JSON reports and CSV traces.

use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use secest_core::estimation::{ConsensusRounds, ErrorBounds, EstimatorParams};
use secest_core::model::EigenmodeBasis;
use secest_core::security::{SecurityIndex, SecurityMeasure, SecurityPlan};
use secest_core::sim::{ScenarioOutcome, Trace};

use crate::error::CliResult;

/// Integer index or `"inf"`.
pub fn index_json(index: SecurityIndex) -> Value {
    match index {
        SecurityIndex::Finite(k) => json!(k),
        SecurityIndex::Infinite => json!("inf"),
    }
}

pub fn phi_json(m: &SecurityMeasure) -> Value {
    json!(m.phi().iter().map(|t| t.letter().to_string()).collect::<Vec<_>>())
}

/// Finite numbers as numbers, infinities as `null`.
pub fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Basis mode at `position`, agent numbered from 1.
pub fn mode_json(basis: &EigenmodeBasis, position: Option<usize>) -> Value {
    match position.and_then(|p| basis.modes().get(p).map(|m| (p, m))) {
        Some((p, m)) => json!({
            "position": p,
            "agent": m.agent + 1,
            "local": m.local,
            "eigenvalue": [m.eigenvalue.re, m.eigenvalue.im],
            "chain_level": m.chain_level,
        }),
        None => Value::Null,
    }
}

pub fn plan_json(plan: &SecurityPlan, basis: &EigenmodeBasis) -> Value {
    json!({
        "phi": phi_json(&plan.measure),
        "index": index_json(plan.index),
        "cost": plan.cost,
        "algorithm": plan.algorithm.name(),
        "stage": match plan.stage {
            secest_core::security::PlanStage::Detectable => "detectable",
            secest_core::security::PlanStage::MaxIndex => "max_index",
        },
        "certificate_mode": mode_json(basis, plan.certificate),
    })
}

pub fn rounds_json(r: ConsensusRounds) -> Value {
    match r {
        ConsensusRounds::AtLeast(l) => json!(l),
        ConsensusRounds::Any => json!("any"),
        ConsensusRounds::Infeasible => json!("infeasible"),
    }
}

pub fn params_json(p: &EstimatorParams) -> Value {
    json!({
        "omega": p.omega,
        "L": p.rounds,
        "theta0": p.theta0,
        "nu0": p.nu0,
        "gamma_perp": p.gamma_perp,
    })
}

pub fn bounds_json(b: &ErrorBounds) -> Value {
    json!({
        "estimation": finite(b.est_bound),
        "control": finite(b.ctrl_bound),
    })
}

pub fn summary_json(out: &ScenarioOutcome, theta_a: f64, gain_norm: f64) -> Value {
    let s = &out.summary;
    json!({
        "phi": phi_json(&out.measure),
        "eq7_tail": s.eq7_tail,
        "eq7_tail_mean": s.eq7_tail_mean,
        "max_est_err_tail": s.max_est_err_tail,
        "max_ctrl_err_tail": s.max_ctrl_err_tail,
        "tail_start": s.tail_start,
        "per_agent_est_max": s.per_agent_est_max,
        "per_agent_ctrl_max": s.per_agent_ctrl_max,
        "params": params_json(&out.params),
        "bounds": {
            "estimation": finite(out.bounds.est_bound),
            "control": finite(out.bounds.ctrl_bound),
            "estimation_violated": s.est_bound_violated,
            "control_violated": s.ctrl_bound_violated,
        },
        "hypotheses": {
            "theta_a": theta_a,
            "theta_a_below_one": theta_a < 1.0,
            "gain_norm": gain_norm,
            "gain_contractive": gain_norm < 1.0,
            "bounds_hold": out.bounds.stable,
            "consensus_norm": out.consensus_norm,
            "disagreement_norm": out.disagreement_norm,
            "extended_stable": out.extended_stable,
        },
        "blocked_attack_steps": out.trace.blocked.len(),
    })
}

/// Indented JSON with arrays of scalars kept on one line.
pub fn to_json_text(value: &Value) -> String {
    fn scalar(v: &Value) -> bool {
        !matches!(v, Value::Array(_) | Value::Object(_))
    }
    fn write(v: &Value, indent: usize, out: &mut String) {
        let pad = "  ".repeat(indent + 1);
        match v {
            Value::Array(items) if items.iter().all(scalar) => {
                let parts: Vec<String> = items.iter().map(Value::to_string).collect();
                out.push('[');
                out.push_str(&parts.join(", "));
                out.push(']');
            }
            Value::Array(items) => {
                out.push_str("[\n");
                for (j, item) in items.iter().enumerate() {
                    out.push_str(&pad);
                    write(item, indent + 1, out);
                    out.push_str(if j + 1 < items.len() { ",\n" } else { "\n" });
                }
                out.push_str(&"  ".repeat(indent));
                out.push(']');
            }
            Value::Object(map) if map.is_empty() => out.push_str("{}"),
            Value::Object(map) => {
                out.push_str("{\n");
                for (j, (k, item)) in map.iter().enumerate() {
                    out.push_str(&pad);
                    out.push_str(&Value::String(k.clone()).to_string());
                    out.push_str(": ");
                    write(item, indent + 1, out);
                    out.push_str(if j + 1 < map.len() { ",\n" } else { "\n" });
                }
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let mut out = String::new();
    write(value, 0, &mut out);
    out
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per `(k, agent)`; agents numbered from 1, reals with 17 significant digits.
pub fn write_trace<W: Write>(trace: &Trace, n: usize, m: usize, out: W) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string(), "agent".to_string()];
    for prefix in ["x", "xhat", "xstar"] {
        header.extend((1..=n).map(|j| format!("{prefix}{j}")));
    }
    header.extend((1..=m).map(|j| format!("u{j}")));
    header.extend(["err_est", "err_ctrl", "attack_active", "metric"].map(String::from));
    w.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.k.to_string(), (r.agent + 1).to_string()];
        for v in [&r.x, &r.x_hat, &r.x_star, &r.u] {
            row.extend(v.iter().map(|&x| num(x)));
        }
        row.push(num(r.err_est));
        row.push(num(r.err_ctrl));
        row.push(u8::from(r.attack_active).to_string());
        row.push(num(r.metric));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A named pass/fail/skip outcome of `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}
