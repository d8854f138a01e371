//! Seeded random instances for sweeps and property checks.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::model::{lift_system, CommGraph, LtiModel, MultiAgentSystem};
use crate::security::CostModel;

/// Which agents' states each agent's sensors cover. Every agent always covers itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationPattern {
    /// A contiguous range of agents; the incidence matrix is then totally unimodular.
    Contiguous,
    /// An arbitrary subset.
    Subset,
    /// Every agent.
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomSystemSpec {
    pub min_state_dim: usize,
    pub max_state_dim: usize,
    pub min_agents: usize,
    pub max_agents: usize,
    /// Largest spectral radius of the sampled `A`.
    pub max_spectral_radius: f64,
    /// Probability of a single repeated-eigenvalue Jordan block.
    pub jordan_probability: f64,
    pub pattern: ObservationPattern,
}

impl Default for RandomSystemSpec {
    fn default() -> Self {
        Self {
            min_state_dim: 1,
            max_state_dim: 3,
            min_agents: 2,
            max_agents: 6,
            max_spectral_radius: 1.05,
            jordan_probability: 0.2,
            pattern: ObservationPattern::Contiguous,
        }
    }
}

fn uniform_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Random square matrix with spectral radius drawn from `[0.3, max_radius]`.
/// With probability `jordan_probability` the matrix is a single Jordan block.
pub fn random_dynamics<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_radius: f64,
    jordan_probability: f64,
) -> DMatrix<f64> {
    let target = rng.random_range(0.3..=max_radius.max(0.3));
    if n > 1 && rng.random_bool(jordan_probability.clamp(0.0, 1.0)) {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let mut a = DMatrix::from_diagonal_element(n, n, sign * target);
        for i in 0..n - 1 {
            a[(i, i + 1)] = rng.random_range(0.2..1.0);
        }
        return a;
    }
    loop {
        let a = uniform_matrix(rng, n, n);
        let rho = spectral_radius(&a);
        if rho > 1e-3 {
            return a * (target / rho);
        }
    }
}

/// Connected graph: a random spanning tree plus each remaining edge with probability 0.3.
pub fn random_connected_graph<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<CommGraph> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        edges.push((order[k].min(parent), order[k].max(parent)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.contains(&(i, j)) && rng.random_bool(0.3) {
                edges.push((i, j));
            }
        }
    }
    CommGraph::from_edges(n, &edges)
}

/// Agents covered by agent `r` under `pattern`.
fn coverage<R: Rng + ?Sized>(rng: &mut R, pattern: ObservationPattern, n: usize, r: usize) -> Vec<usize> {
    match pattern {
        ObservationPattern::Dense => (0..n).collect(),
        ObservationPattern::Contiguous => {
            let lo = rng.random_range(0..=r);
            let hi = rng.random_range(r..n);
            (lo..=hi).collect()
        }
        ObservationPattern::Subset => (0..n).filter(|&j| j == r || rng.random_bool(0.35)).collect(),
    }
}

/// Random multi-agent system. Each agent gets `p_r ∈ [1, n]` sensors, with an
/// independent random `p_r × n` block for every covered agent.
pub fn random_system<R: Rng + ?Sized>(rng: &mut R, spec: &RandomSystemSpec) -> Result<MultiAgentSystem> {
    let n = rng.random_range(spec.min_state_dim..=spec.max_state_dim);
    let agents = rng.random_range(spec.min_agents..=spec.max_agents);
    let a = random_dynamics(rng, n, spec.max_spectral_radius, spec.jordan_probability);
    let b = uniform_matrix(rng, n, 1);
    let model = LtiModel::new(a, b)?;
    let graph = random_connected_graph(rng, agents)?;
    let mut c = Vec::with_capacity(agents);
    for r in 0..agents {
        let p = rng.random_range(1..=n);
        let mut cr = DMatrix::zeros(p, n * agents);
        for j in coverage(rng, spec.pattern, agents, r) {
            cr.view_mut((0, j * n), (p, n)).copy_from(&uniform_matrix(rng, p, n));
        }
        c.push(cr);
    }
    lift_system(model, graph, c)
}

/// Costs shared by all agents with a budget drawn between the all-normal and
/// all-secure totals.
pub fn random_common_costs<R: Rng + ?Sized>(rng: &mut R, agents: usize) -> Result<CostModel> {
    let normal = f64::from(rng.random_range(1u8..=3));
    let secure = normal + f64::from(rng.random_range(1u8..=30));
    let budget = rng.random_range(agents as f64 * normal..=agents as f64 * secure);
    CostModel::uniform(agents, normal, secure, budget)
}
