use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{CommGraph, MultiAgentSystem};
use crate::security::SecurityMeasure;

use super::params::EstimatorParams;

/// One agent's estimate of the full lifted state.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentEstimatorState {
    /// Estimate of the whole lifted state (length `nN`).
    pub xi_hat: DVector<f64>,
    /// This agent's block of `xi_hat` (length `n`).
    pub x_hat: DVector<f64>,
    /// Estimate after the observation update, before consensus.
    pub provisional: DVector<f64>,
}

impl AgentEstimatorState {
    pub fn new(system: &MultiAgentSystem, agent: usize, xi_hat: DVector<f64>) -> Result<Self> {
        if xi_hat.len() != system.lifted_dim() {
            return Err(Error::DimensionMismatch(format!(
                "initial estimate has length {}, expected {}",
                xi_hat.len(),
                system.lifted_dim()
            )));
        }
        let x_hat = xi_hat.rows_range(system.state_block(agent)).into_owned();
        Ok(Self {
            provisional: xi_hat.clone(),
            xi_hat,
            x_hat,
        })
    }
}

/// All agents start from the zero estimate.
pub fn initial_states(system: &MultiAgentSystem) -> Vec<AgentEstimatorState> {
    (0..system.agent_count())
        .map(|i| {
            AgentEstimatorState::new(system, i, DVector::zeros(system.lifted_dim()))
                .expect("zero estimate has the lifted dimension")
        })
        .collect()
}

/// Runs `rounds` synchronous Laplacian consensus rounds with gain `omega`.
pub fn consensus(graph: &CommGraph, values: &mut [DVector<f64>], omega: f64, rounds: usize) {
    for _ in 0..rounds {
        let snapshot = values.to_vec();
        for (i, v) in values.iter_mut().enumerate() {
            for &j in graph.neighbors(i) {
                *v -= omega * (&snapshot[i] - &snapshot[j]);
            }
        }
    }
}

/// One estimator step for every agent: time update, observation update on
/// secure agents only, `L` consensus rounds, then local extraction.
pub fn step_estimator(
    states: &mut [AgentEstimatorState],
    system: &MultiAgentSystem,
    measure: &SecurityMeasure,
    params: &EstimatorParams,
    u_prev: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<()> {
    let n_agents = system.agent_count();
    if states.len() != n_agents || measure.agent_count() != n_agents {
        return Err(Error::DimensionMismatch(format!(
            "{} states and {} measure entries for {n_agents} agents",
            states.len(),
            measure.agent_count()
        )));
    }
    if u_prev.len() != system.b_bar().ncols() || y.len() != system.output_dim() {
        return Err(Error::DimensionMismatch(format!(
            "input length {} (expected {}), output length {} (expected {})",
            u_prev.len(),
            system.b_bar().ncols(),
            y.len(),
            system.output_dim()
        )));
    }
    let drive = system.b_bar() * u_prev;
    let mut xi: Vec<DVector<f64>> = Vec::with_capacity(n_agents);
    for (i, s) in states.iter().enumerate() {
        let mut predicted = system.a_bar() * &s.xi_hat + &drive;
        if measure.is_secure(i) {
            let c = system.c(i);
            let innovation = y.rows_range(system.output_block(i)) - c * &predicted;
            predicted += c.transpose() * innovation;
        }
        xi.push(predicted);
    }
    for (s, v) in states.iter_mut().zip(&xi) {
        s.provisional.clone_from(v);
    }
    consensus(system.graph(), &mut xi, params.omega, params.rounds);
    for (i, (s, v)) in states.iter_mut().zip(xi).enumerate() {
        s.x_hat = v.rows_range(system.state_block(i)).into_owned();
        s.xi_hat = v;
    }
    Ok(())
}

/// `u_i = K_p (x*_i - x̂_i)`.
pub fn control_input(x_hat: &DVector<f64>, x_star: &DVector<f64>, kp: &DMatrix<f64>) -> DVector<f64> {
    kp * (x_star - x_hat)
}

/// Result of flooding local inputs through the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedInputs {
    /// The stacked input as assembled by each agent.
    pub per_agent: Vec<DVector<f64>>,
    /// Message rounds until every agent knew every input.
    pub rounds: usize,
}

/// Synchronous flooding: each round, every agent forwards all inputs it knows to
/// its neighbours. Completes after `diameter` rounds on a connected graph.
pub fn input_fusion(local: &[DVector<f64>], graph: &CommGraph) -> Result<FusedInputs> {
    let n = graph.agent_count();
    if local.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} inputs for {n} agents",
            local.len()
        )));
    }
    let m = local.first().map_or(0, DVector::len);
    if local.iter().any(|u| u.len() != m) {
        return Err(Error::DimensionMismatch("local inputs differ in length".into()));
    }
    let mut known: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect();
    let mut rounds = 0;
    while known.iter().any(|k| k.iter().any(|&x| !x)) {
        let snapshot = known.clone();
        for (i, k) in known.iter_mut().enumerate() {
            for &j in graph.neighbors(i) {
                for (slot, &has) in k.iter_mut().zip(&snapshot[j]) {
                    *slot |= has;
                }
            }
        }
        rounds += 1;
        if rounds > n {
            return Err(Error::DisconnectedGraph {
                lambda2: graph.lambda2(),
            });
        }
    }
    let mut stacked = DVector::zeros(n * m);
    for (j, u) in local.iter().enumerate() {
        stacked.rows_mut(j * m, m).copy_from(u);
    }
    Ok(FusedInputs {
        per_agent: vec![stacked; n],
        rounds,
    })
}
