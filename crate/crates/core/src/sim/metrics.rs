use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::estimation::ErrorBounds;

use super::scenario::Trace;

/// Tail window used as the empirical stand-in for `limsup`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailWindow {
    pub fraction: f64,
    pub min_steps: usize,
}

impl Default for TailWindow {
    fn default() -> Self {
        Self {
            fraction: 0.2,
            min_steps: 200,
        }
    }
}

impl TailWindow {
    /// First step of the window for a run of `horizon` steps.
    pub fn start(&self, horizon: usize) -> usize {
        let len = (libm::ceil(self.fraction * horizon as f64) as usize)
            .max(self.min_steps)
            .min(horizon);
        horizon - len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub tail_start: usize,
    /// Maximum of the per-step performance metric over the tail.
    pub eq7_tail: f64,
    /// Mean of the per-step performance metric over the tail.
    pub eq7_tail_mean: f64,
    pub max_est_err_tail: f64,
    pub max_ctrl_err_tail: f64,
    pub per_agent_est_max: Vec<f64>,
    pub per_agent_ctrl_max: Vec<f64>,
    /// Set only when bounds were supplied.
    pub est_bound_violated: Option<bool>,
    pub ctrl_bound_violated: Option<bool>,
}

/// Tail statistics of a trace, with optional comparison against the error bounds
/// (allowing `1e-6` slack).
pub fn compute_metrics(trace: &Trace, bounds: Option<&ErrorBounds>, tail: TailWindow) -> Result<Summary> {
    if trace.records.is_empty() || trace.agents == 0 {
        return Err(Error::EmptyTrace);
    }
    let steps = trace.records.len() / trace.agents;
    let start = tail.start(steps);
    let mut est = vec![0.0_f64; trace.agents];
    let mut ctrl = vec![0.0_f64; trace.agents];
    let mut metric_max = 0.0_f64;
    let mut metric_sum = 0.0;
    for k in start..steps {
        for r in trace.step(k) {
            est[r.agent] = est[r.agent].max(r.err_est);
            ctrl[r.agent] = ctrl[r.agent].max(r.err_ctrl);
        }
        let m = trace.metric(k);
        metric_max = metric_max.max(m);
        metric_sum += m;
    }
    let max_est = est.iter().copied().fold(0.0, f64::max);
    let max_ctrl = ctrl.iter().copied().fold(0.0, f64::max);
    Ok(Summary {
        tail_start: start,
        eq7_tail: metric_max,
        eq7_tail_mean: metric_sum / (steps - start) as f64,
        max_est_err_tail: max_est,
        max_ctrl_err_tail: max_ctrl,
        per_agent_est_max: est,
        per_agent_ctrl_max: ctrl,
        est_bound_violated: bounds.map(|b| max_est > b.est_bound + 1e-6),
        ctrl_bound_violated: bounds.map(|b| max_ctrl > b.ctrl_bound + 1e-6),
    })
}
