use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{matrix_power, spectral_norm};
use crate::model::MultiAgentSystem;
use crate::security::SecurityMeasure;

use super::params::EstimatorParams;

/// Closed-form error dynamics of the stacked estimation errors
/// `E = [ξ̂_1 - x; …; ξ̂_N - x]`:
/// `E(k) = M E(k-1) + D_w (1_N ⊗ w(k-1)) + D_v v(k)`.
#[derive(Debug, Clone)]
pub struct ExtendedErrorSystem {
    pub m: DMatrix<f64>,
    pub d_w: DMatrix<f64>,
    pub d_v: DMatrix<f64>,
    /// `‖P♯ M‖` with `P♯ = (1/N) 1 1ᵀ ⊗ I`.
    pub consensus_norm: f64,
    /// `‖P⊥ M‖` with `P⊥ = I - P♯`.
    pub disagreement_norm: f64,
    pub stable: bool,
}

impl ExtendedErrorSystem {
    /// One step of the recursion.
    pub fn step(&self, e: &DVector<f64>, w_prev: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let n_agents = self.m.nrows() / w_prev.len().max(1);
        let mut replicated = DVector::zeros(w_prev.len() * n_agents);
        for i in 0..n_agents {
            replicated.rows_mut(i * w_prev.len(), w_prev.len()).copy_from(w_prev);
        }
        &self.m * e + &self.d_w * replicated + &self.d_v * v
    }
}

pub fn build_extended_error_system(
    system: &MultiAgentSystem,
    measure: &SecurityMeasure,
    params: &EstimatorParams,
) -> Result<ExtendedErrorSystem> {
    let n_agents = system.agent_count();
    if measure.agent_count() != n_agents {
        return Err(Error::DimensionMismatch(alloc::format!(
            "measure has {} agents, system has {n_agents}",
            measure.agent_count()
        )));
    }
    let nn = system.lifted_dim();
    let big = nn * n_agents;
    let p = system.output_dim();

    // C̃ᵀ S C̃ and C̃ᵀ S, block-diagonal over agents.
    let mut gram = DMatrix::<f64>::zeros(big, big);
    let mut ct_s = DMatrix::<f64>::zeros(big, p);
    for i in measure.secure_set() {
        let c = system.c(i);
        gram.view_mut((i * nn, i * nn), (nn, nn))
            .copy_from(&(c.transpose() * c));
        let rows = system.output_block(i);
        ct_s.view_mut((i * nn, rows.start), (nn, rows.len()))
            .copy_from(&c.transpose());
    }
    let eye = DMatrix::<f64>::identity(big, big);
    let consensus_step =
        &eye - (system.graph().laplacian().kronecker(&DMatrix::<f64>::identity(nn, nn))) * params.omega;
    let w = matrix_power(&consensus_step, params.rounds);
    let lifted_a = DMatrix::<f64>::identity(n_agents, n_agents).kronecker(system.a_bar());
    let m = &w * (&eye - &gram) * lifted_a;
    let d_w = &w * (&gram - &eye);
    let d_v = &w * ct_s;

    let avg = DMatrix::<f64>::from_element(n_agents, n_agents, 1.0 / n_agents as f64)
        .kronecker(&DMatrix::<f64>::identity(nn, nn));
    let consensus_norm = spectral_norm(&(&avg * &m));
    let disagreement_norm = spectral_norm(&((&eye - &avg) * &m));
    Ok(ExtendedErrorSystem {
        m,
        d_w,
        d_v,
        consensus_norm,
        disagreement_norm,
        stable: consensus_norm < 1.0 && disagreement_norm < 1.0,
    })
}
