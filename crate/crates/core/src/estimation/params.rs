use alloc::format;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::model::{CommGraph, LtiModel, MultiAgentSystem};
use crate::security::SecurityMeasure;

/// Consensus gain `2 / (λ₂ + λ_max)`. A single agent has no neighbours, so the
/// gain is irrelevant and 1 is returned.
pub fn design_omega(graph: &CommGraph) -> Result<f64> {
    if graph.agent_count() == 1 {
        return Ok(1.0);
    }
    let (l2, lmax) = crate::model::laplacian_spectrum(graph)?;
    Ok(2.0 / (l2 + lmax))
}

/// Disagreement contraction `(λ_max - λ₂) / (λ_max + λ₂)`; 0 for a single agent.
pub fn gamma_perp(graph: &CommGraph) -> Result<f64> {
    if graph.agent_count() == 1 {
        return Ok(0.0);
    }
    let (l2, lmax) = crate::model::laplacian_spectrum(graph)?;
    Ok(((lmax - l2) / (lmax + l2)).max(0.0))
}

/// `(θ₀, ν₀)`: the largest `‖I - C_iᵀC_i‖` and `‖C_i‖` over secure agents.
pub fn secure_norms(system: &MultiAgentSystem, secure: &[usize]) -> Result<(f64, f64)> {
    if secure.is_empty() {
        return Err(Error::EmptySecureSet);
    }
    let nn = system.lifted_dim();
    let mut theta0 = 0.0_f64;
    let mut nu0 = 0.0_f64;
    for &i in secure {
        let c = system.c(i);
        let residual = DMatrix::<f64>::identity(nn, nn) - c.transpose() * c;
        theta0 = theta0.max(spectral_norm(&residual));
        nu0 = nu0.max(spectral_norm(c));
    }
    Ok((theta0, nu0))
}

/// Outcome of the minimum consensus-round computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsensusRounds {
    /// Smallest certified round count.
    AtLeast(usize),
    /// Every `L >= 1` is certified.
    Any,
    /// `θ₀‖A‖ >= 1`: no round count is certified.
    Infeasible,
}

impl ConsensusRounds {
    pub fn admits(self, rounds: usize) -> bool {
        match self {
            ConsensusRounds::AtLeast(l) => rounds >= l,
            ConsensusRounds::Any => rounds >= 1,
            ConsensusRounds::Infeasible => false,
        }
    }
}

/// Smallest integer `L` strictly above `ln(1/(θ₀‖A‖)) / ln(1/γ⊥)`.
pub fn consensus_rounds_for(theta_a: f64, gamma: f64) -> ConsensusRounds {
    if theta_a >= 1.0 {
        return ConsensusRounds::Infeasible;
    }
    if gamma <= 0.0 || theta_a <= 0.0 {
        return ConsensusRounds::Any;
    }
    let x = libm::log(1.0 / theta_a) / libm::log(1.0 / gamma);
    let nearest = libm::round(x);
    let l = if (x - nearest).abs() <= 1e-9 {
        nearest + 1.0
    } else {
        libm::floor(x) + 1.0
    };
    ConsensusRounds::AtLeast((l as usize).max(1))
}

pub fn min_consensus_rounds(system: &MultiAgentSystem, secure: &[usize]) -> Result<ConsensusRounds> {
    let (theta0, _) = secure_norms(system, secure)?;
    let a_norm = spectral_norm(system.model().a());
    Ok(consensus_rounds_for(theta0 * a_norm, gamma_perp(system.graph())?))
}

/// `‖A - B K_p‖` and whether it is below 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainCheck {
    pub norm: f64,
    pub contractive: bool,
}

pub fn check_gain(model: &LtiModel, kp: &DMatrix<f64>) -> Result<GainCheck> {
    if kp.nrows() != model.input_dim() || kp.ncols() != model.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "Kp is {}x{}, expected {}x{}",
            kp.nrows(),
            kp.ncols(),
            model.input_dim(),
            model.state_dim()
        )));
    }
    let norm = spectral_norm(&(model.a() - model.b() * kp));
    Ok(GainCheck {
        norm,
        contractive: norm < 1.0,
    })
}

/// Parameters of the distributed estimator and controller.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorParams {
    pub omega: f64,
    pub rounds: usize,
    pub kp: DMatrix<f64>,
    pub theta0: f64,
    pub nu0: f64,
    pub gamma_perp: f64,
}

/// Assembles parameters; `omega` and `rounds` default to the designed values.
/// Automatic round selection fails when no round count is certified.
pub fn design_params(
    system: &MultiAgentSystem,
    measure: &SecurityMeasure,
    kp: DMatrix<f64>,
    omega: Option<f64>,
    rounds: Option<usize>,
) -> Result<EstimatorParams> {
    check_gain(system.model(), &kp)?;
    let secure = measure.secure_set();
    let (theta0, nu0) = secure_norms(system, &secure)?;
    let omega = match omega {
        Some(w) if w.is_finite() && w >= 0.0 => w,
        Some(w) => return Err(Error::InvalidInput(format!("omega must be nonnegative, got {w}"))),
        None => design_omega(system.graph())?,
    };
    let rounds = match rounds {
        Some(0) => return Err(Error::InvalidInput("L must be at least 1".into())),
        Some(l) => l,
        None => match min_consensus_rounds(system, &secure)? {
            ConsensusRounds::AtLeast(l) => l,
            ConsensusRounds::Any => 1,
            ConsensusRounds::Infeasible => {
                return Err(Error::HypothesisViolated(format!(
                    "theta0 * ||A|| = {} >= 1, no consensus round count is certified",
                    theta0 * spectral_norm(system.model().a())
                )))
            }
        },
    };
    Ok(EstimatorParams {
        omega,
        rounds,
        kp,
        theta0,
        nu0,
        gamma_perp: gamma_perp(system.graph())?,
    })
}

/// Right-hand sides of the asymptotic error bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBounds {
    pub est_bound: f64,
    pub ctrl_bound: f64,
    pub stable: bool,
}

/// Asymptotic bound on every `‖x̂_i - x_i‖`.
pub fn estimation_error_bound(
    system: &MultiAgentSystem,
    params: &EstimatorParams,
    delta_w: f64,
    delta_v: f64,
) -> Result<f64> {
    let a_norm = spectral_norm(system.model().a());
    let theta_a = params.theta0 * a_norm;
    if theta_a >= 1.0 {
        return Err(Error::HypothesisViolated(format!("theta0 * ||A|| = {theta_a} >= 1")));
    }
    let required = consensus_rounds_for(theta_a, params.gamma_perp);
    if !required.admits(params.rounds) {
        return Err(Error::HypothesisViolated(format!(
            "L = {} does not satisfy the round condition ({required:?})",
            params.rounds
        )));
    }
    let n = system.agent_count() as f64;
    let drive = params.theta0 * libm::sqrt(n) * n * delta_w + params.nu0 * n * delta_v;
    let g = libm::pow(params.gamma_perp, params.rounds as f64);
    Ok(drive / (1.0 - theta_a) + g * drive / (1.0 - g * theta_a))
}

/// Asymptotic bound on every `‖x_i - x*_i‖` given the estimation bound.
pub fn control_error_bound(model: &LtiModel, kp: &DMatrix<f64>, est_bound: f64, delta_w: f64) -> Result<f64> {
    let gain = check_gain(model, kp)?;
    if !gain.contractive {
        return Err(Error::GainHypothesisViolated { norm: gain.norm });
    }
    let bk = spectral_norm(&(model.b() * kp));
    Ok((bk * est_bound + delta_w) / (1.0 - gain.norm))
}

/// Both bounds; `stable` is false (and bounds infinite) when a hypothesis fails.
pub fn error_bounds(system: &MultiAgentSystem, params: &EstimatorParams, delta_w: f64, delta_v: f64) -> ErrorBounds {
    let est = estimation_error_bound(system, params, delta_w, delta_v);
    let ctrl = est
        .as_ref()
        .ok()
        .map(|&e| control_error_bound(system.model(), &params.kp, e, delta_w));
    match (est, ctrl) {
        (Ok(e), Some(Ok(c))) => ErrorBounds {
            est_bound: e,
            ctrl_bound: c,
            stable: true,
        },
        (Ok(e), _) => ErrorBounds {
            est_bound: e,
            ctrl_bound: f64::INFINITY,
            stable: false,
        },
        _ => ErrorBounds {
            est_bound: f64::INFINITY,
            ctrl_bound: f64::INFINITY,
            stable: false,
        },
    }
}
