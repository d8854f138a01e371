use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimation::{
    build_extended_error_system, control_input, design_params, error_bounds, initial_states, input_fusion,
    step_estimator, AgentEstimatorState, ErrorBounds, EstimatorParams,
};
use crate::model::{lift_system, CommGraph, LtiModel, MultiAgentSystem};
use crate::security::{
    brute_force_plan, efficient_plan, AnalysisOptions, CostModel, PlanAlgorithm, SecurityAnalysis, SecurityMeasure,
    SecurityPlan,
};

use super::attack::{inject_attack, AttackSpec};
use super::metrics::{compute_metrics, Summary, TailWindow};
use super::noise::{gen_noise, NoiseStream};

/// Where the security measure of a run comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSource {
    Fixed(SecurityMeasure),
    /// Computed from the cost model. `None` runs the efficient planner and falls
    /// back to brute force when it cannot certify its answer.
    Plan {
        algorithm: Option<PlanAlgorithm>,
        options: AnalysisOptions,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    /// `None` selects the designed gain.
    pub omega: Option<f64>,
    /// `None` selects the smallest certified round count.
    pub rounds: Option<usize>,
    pub kp: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DesiredState {
    /// Leader tracks `(p₀ + v T k, v)`; follower `i` tracks `(p̂_{i-1} - spacing, v̂_{i-1})`
    /// built from the predecessor's own estimate.
    Platoon {
        lead_position: f64,
        lead_speed: f64,
        spacing: f64,
        sampling: f64,
    },
    /// Each agent tracks `x*_i(k+1) = A x*_i(k)` from the given lifted start.
    Autonomous { initial: DVector<f64> },
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub system: MultiAgentSystem,
    pub costs: Option<CostModel>,
    pub measure: MeasureSource,
    pub estimator: EstimatorSpec,
    pub horizon: usize,
    pub seed: u64,
    pub attacks: Vec<AttackSpec>,
    pub desired: DesiredState,
    pub delta_w: f64,
    pub delta_v: f64,
    /// True lifted initial state.
    pub x0: DVector<f64>,
    /// Per-agent initial estimates; zero when absent.
    pub xi0: Option<Vec<DVector<f64>>>,
    pub tail: TailWindow,
}

/// Initial platoon states for the first five vehicles; later vehicles trail
/// 20 m apart at 2 m/s.
const PLATOON_START: [(f64, f64); 5] = [(200.0, 10.0), (100.0, 8.0), (50.0, 6.0), (20.0, 4.0), (0.0, 2.0)];

/// Double-integrator platoon: vehicle 1 measures its own state, every other
/// vehicle its own state and its offset from the vehicle ahead. Vehicles within
/// two positions of each other communicate.
pub fn build_platoon(
    n: usize,
    sampling: f64,
    delta_w: f64,
    delta_v: f64,
    costs: Option<CostModel>,
) -> Result<ScenarioConfig> {
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "a platoon needs at least 2 vehicles, got {n}"
        )));
    }
    let a = DMatrix::from_row_slice(2, 2, &[1.0, sampling, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, sampling]);
    let model = LtiModel::new(a, b)?;
    let graph = CommGraph::banded(n, 2)?;
    let mut c = Vec::with_capacity(n);
    for i in 0..n {
        let rows = if i == 0 { 2 } else { 4 };
        let mut ci = DMatrix::zeros(rows, 2 * n);
        ci.view_mut((0, 2 * i), (2, 2)).fill_with_identity();
        if i > 0 {
            ci.view_mut((2, 2 * i), (2, 2)).fill_with_identity();
            ci.view_mut((2, 2 * (i - 1)), (2, 2))
                .copy_from(&-DMatrix::<f64>::identity(2, 2));
        }
        c.push(ci);
    }
    let system = lift_system(model, graph, c)?;
    let mut x0 = DVector::zeros(2 * n);
    for i in 0..n {
        let (p, v) = match PLATOON_START.get(i) {
            Some(&s) => s,
            None => (-20.0 * (i - 4) as f64, 2.0),
        };
        x0[2 * i] = p;
        x0[2 * i + 1] = v;
    }
    Ok(ScenarioConfig {
        system,
        costs,
        measure: MeasureSource::Plan {
            algorithm: None,
            options: AnalysisOptions::default(),
        },
        estimator: EstimatorSpec {
            omega: None,
            rounds: Some(5),
            kp: DMatrix::from_row_slice(1, 2, &[29.1604, 15.2590]),
        },
        horizon: 5000,
        seed: 0,
        attacks: Vec::new(),
        desired: DesiredState::Platoon {
            lead_position: 200.0,
            lead_speed: 15.0,
            spacing: 20.0,
            sampling,
        },
        delta_w,
        delta_v,
        x0,
        xi0: None,
        tail: TailWindow::default(),
    })
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let sys = &self.system;
        if self.horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        if !(self.delta_w >= 0.0 && self.delta_v >= 0.0 && self.delta_w.is_finite() && self.delta_v.is_finite()) {
            return Err(Error::InvalidInput(
                "noise bounds must be finite and nonnegative".into(),
            ));
        }
        if self.x0.len() != sys.lifted_dim() {
            return Err(Error::DimensionMismatch(format!(
                "x0 has length {}, expected {}",
                self.x0.len(),
                sys.lifted_dim()
            )));
        }
        if let Some(xi0) = &self.xi0 {
            if xi0.len() != sys.agent_count() || xi0.iter().any(|x| x.len() != sys.lifted_dim()) {
                return Err(Error::DimensionMismatch(
                    "initial estimates must be N vectors of length nN".into(),
                ));
            }
        }
        for atk in &self.attacks {
            atk.validate(sys, self.horizon)?;
        }
        match &self.desired {
            DesiredState::Platoon { .. } if sys.state_dim() != 2 => {
                return Err(Error::InvalidInput(
                    "platoon desired states need a 2-dimensional state".into(),
                ))
            }
            DesiredState::Autonomous { initial } if initial.len() != sys.lifted_dim() => {
                return Err(Error::DimensionMismatch(
                    "desired initial state must have length nN".into(),
                ))
            }
            _ => {}
        }
        if let Some(costs) = &self.costs {
            if costs.agent_count() != sys.agent_count() {
                return Err(Error::DimensionMismatch("cost model and system disagree on N".into()));
            }
        }
        Ok(())
    }
}

/// Resolves the measure: a fixed one, or a plan from the cost model.
pub fn resolve_measure(config: &ScenarioConfig) -> Result<(SecurityMeasure, Option<SecurityPlan>)> {
    match &config.measure {
        MeasureSource::Fixed(m) => {
            if m.agent_count() != config.system.agent_count() {
                return Err(Error::DimensionMismatch("measure length differs from N".into()));
            }
            Ok((m.clone(), None))
        }
        MeasureSource::Plan { algorithm, options } => {
            let costs = config
                .costs
                .as_ref()
                .ok_or_else(|| Error::PlanInfeasible("planning requires a cost model".into()))?;
            let analysis = SecurityAnalysis::new(&config.system, *options)?;
            let plan = plan_with(&analysis, costs, *algorithm)?;
            Ok((plan.measure.clone(), Some(plan)))
        }
    }
}

/// Runs the requested planner. Without an explicit choice the efficient planner
/// is tried first and brute force covers the cases it cannot certify.
pub fn plan_with(
    analysis: &SecurityAnalysis<'_>,
    costs: &CostModel,
    algorithm: Option<PlanAlgorithm>,
) -> Result<SecurityPlan> {
    match algorithm {
        Some(PlanAlgorithm::BruteForce) => brute_force_plan(analysis, costs),
        Some(PlanAlgorithm::Efficient) => efficient_plan(analysis, costs),
        None => match efficient_plan(analysis, costs) {
            Err(Error::NonIntegralVertex { .. } | Error::RequiresCommonCosts | Error::Infeasible { .. }) => {
                brute_force_plan(analysis, costs)
            }
            other => other,
        },
    }
}

/// One row of the trace: agent `agent` at step `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub agent: usize,
    pub x: DVector<f64>,
    pub x_hat: DVector<f64>,
    pub x_star: DVector<f64>,
    pub u: DVector<f64>,
    pub err_est: f64,
    pub err_ctrl: f64,
    /// An attack reached this agent's measurement.
    pub attack_active: bool,
    /// `(1/N) Σ_i (‖x̂_i - x_i‖ + ‖x_i - x*_i‖)` at step `k`.
    pub metric: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockedAttack {
    pub k: usize,
    pub agent: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub agents: usize,
    pub horizon: usize,
    /// Agent-major within each step: index `k * agents + i`.
    pub records: Vec<TraceRecord>,
    /// Measured outputs `y(k)`.
    pub outputs: Vec<DVector<f64>>,
    /// Attacks aimed at secure agents and therefore discarded.
    pub blocked: Vec<BlockedAttack>,
}

impl Trace {
    pub fn step(&self, k: usize) -> &[TraceRecord] {
        &self.records[k * self.agents..(k + 1) * self.agents]
    }

    pub fn metric(&self, k: usize) -> f64 {
        self.records[k * self.agents].metric
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub measure: SecurityMeasure,
    pub plan: Option<SecurityPlan>,
    pub params: EstimatorParams,
    pub bounds: ErrorBounds,
    pub consensus_norm: f64,
    pub disagreement_norm: f64,
    pub extended_stable: bool,
    pub trace: Trace,
    pub summary: Summary,
}

/// Plans (if needed), designs parameters and simulates the closed loop.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    config.validate()?;
    let (measure, plan) = resolve_measure(config)?;
    if measure.secure_set().is_empty() {
        return Err(Error::PlanInfeasible("the security measure has no secure agent".into()));
    }
    let sys = &config.system;
    let params = design_params(
        sys,
        &measure,
        config.estimator.kp.clone(),
        config.estimator.omega,
        config.estimator.rounds,
    )?;
    let bounds = error_bounds(sys, &params, config.delta_w, config.delta_v);
    let ext = build_extended_error_system(sys, &measure, &params)?;
    let mut states = match &config.xi0 {
        Some(xi0) => xi0
            .iter()
            .enumerate()
            .map(|(i, x)| AgentEstimatorState::new(sys, i, x.clone()))
            .collect::<Result<Vec<_>>>()?,
        None => initial_states(sys),
    };
    let trace = simulate(config, &measure, &params, &mut states)?;
    let hypotheses_hold = bounds.stable && ext.stable;
    let summary = compute_metrics(&trace, hypotheses_hold.then_some(&bounds), config.tail)?;
    Ok(ScenarioOutcome {
        measure,
        plan,
        params,
        bounds,
        consensus_norm: ext.consensus_norm,
        disagreement_norm: ext.disagreement_norm,
        extended_stable: ext.stable,
        trace,
        summary,
    })
}

/// The closed-loop simulation with a fixed measure and parameters.
pub fn simulate(
    config: &ScenarioConfig,
    measure: &SecurityMeasure,
    params: &EstimatorParams,
    states: &mut [AgentEstimatorState],
) -> Result<Trace> {
    let sys = &config.system;
    let n_agents = sys.agent_count();
    let n = sys.state_dim();
    let m = sys.input_dim();
    let mut x = config.x0.clone();
    let mut local_u: Vec<DVector<f64>> = vec![DVector::zeros(m); n_agents];
    let mut x_star_auto = match &config.desired {
        DesiredState::Autonomous { initial } => Some(initial.clone()),
        DesiredState::Platoon { .. } => None,
    };
    let mut records = Vec::with_capacity(config.horizon * n_agents);
    let mut outputs = Vec::with_capacity(config.horizon);
    let mut blocked = Vec::new();

    for k in 0..config.horizon {
        let fused = if k > 0 {
            let mut stacked_u = DVector::zeros(n_agents * m);
            for (i, u) in local_u.iter().enumerate() {
                stacked_u.rows_mut(i * m, m).copy_from(u);
            }
            let mut w = DVector::zeros(sys.lifted_dim());
            for i in 0..n_agents {
                w.rows_mut(i * n, n).copy_from(&gen_noise(
                    config.seed,
                    NoiseStream::Process,
                    i,
                    k - 1,
                    n,
                    config.delta_w,
                ));
            }
            x = sys.a_bar() * &x + sys.b_bar() * stacked_u + w;
            Some(input_fusion(&local_u, sys.graph())?)
        } else {
            None
        };

        let mut y = sys.c_bar() * &x;
        let mut attacked = vec![false; n_agents];
        for i in 0..n_agents {
            let block = sys.output_block(i);
            let v = gen_noise(config.seed, NoiseStream::Measurement, i, k, block.len(), config.delta_v);
            let mut yi = y.rows_range_mut(block);
            yi += v;
        }
        for spec in &config.attacks {
            if let Some(a) = inject_attack(spec, &x, sys, k) {
                if measure.is_secure(spec.target) {
                    blocked.push(BlockedAttack { k, agent: spec.target });
                } else {
                    let mut yi = y.rows_range_mut(sys.output_block(spec.target));
                    yi += a;
                    attacked[spec.target] = true;
                }
            }
        }

        if let Some(fused) = fused {
            // Every agent holds the same fused vector; agent 0's copy drives the lifted update.
            step_estimator(states, sys, measure, params, &fused.per_agent[0], &y)?;
        }

        let x_stars: Vec<DVector<f64>> = match (&config.desired, &x_star_auto) {
            (DesiredState::Autonomous { .. }, Some(xs)) => (0..n_agents)
                .map(|i| xs.rows_range(sys.state_block(i)).into_owned())
                .collect(),
            (
                DesiredState::Platoon {
                    lead_position,
                    lead_speed,
                    spacing,
                    sampling,
                },
                _,
            ) => (0..n_agents)
                .map(|i| {
                    if i == 0 {
                        DVector::from_vec(vec![lead_position + lead_speed * sampling * k as f64, *lead_speed])
                    } else {
                        let prev = &states[i - 1].x_hat;
                        DVector::from_vec(vec![prev[0] - spacing, prev[1]])
                    }
                })
                .collect(),
            _ => unreachable!("autonomous desired state is initialised above"),
        };

        let mut metric = 0.0;
        let mut step_records = Vec::with_capacity(n_agents);
        for i in 0..n_agents {
            let u = control_input(&states[i].x_hat, &x_stars[i], &params.kp);
            let xi = x.rows_range(sys.state_block(i)).into_owned();
            let err_est = (&states[i].x_hat - &xi).norm();
            let err_ctrl = (&xi - &x_stars[i]).norm();
            metric += err_est + err_ctrl;
            local_u[i].copy_from(&u);
            step_records.push(TraceRecord {
                k,
                agent: i,
                x: xi,
                x_hat: states[i].x_hat.clone(),
                x_star: x_stars[i].clone(),
                u,
                err_est,
                err_ctrl,
                attack_active: attacked[i],
                metric: 0.0,
            });
        }
        metric /= n_agents as f64;
        for r in &mut step_records {
            r.metric = metric;
        }
        records.extend(step_records);
        outputs.push(y);

        if let Some(xs) = x_star_auto.as_mut() {
            *xs = sys.a_bar() * &*xs;
        }
    }
    Ok(Trace {
        agents: n_agents,
        horizon: config.horizon,
        records,
        outputs,
        blocked,
    })
}
