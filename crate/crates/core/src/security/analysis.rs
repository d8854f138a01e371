use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, CVector};
use crate::model::{eigenmode_basis, BasisKind, EigenmodeBasis, MultiAgentSystem, DEFAULT_ZERO_TOL};

use super::incidence::IncidenceMatrix;
use super::measure::SecurityMeasure;

/// Minimum number of normal agents an attacker must compromise, or `Infinite`
/// when no undetectable attack exists. `Finite(_) < Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SecurityIndex {
    Finite(usize),
    Infinite,
}

impl SecurityIndex {
    pub fn is_infinite(self) -> bool {
        self == SecurityIndex::Infinite
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            SecurityIndex::Finite(v) => Some(v),
            SecurityIndex::Infinite => None,
        }
    }
}

impl core::fmt::Display for SecurityIndex {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SecurityIndex::Finite(v) => write!(f, "{v}"),
            SecurityIndex::Infinite => f.write_str("inf"),
        }
    }
}

/// Which eigenmodes take part in detectability and incidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModeFilter {
    #[default]
    All,
    /// Only modes with `|λ| >= 1 - 1e-9`.
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub basis: BasisKind,
    pub filter: ModeFilter,
    /// A product `C v` counts as nonzero when its norm exceeds `zero_tol * ‖C̄‖_F`.
    pub zero_tol: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            basis: BasisKind::Jordan,
            filter: ModeFilter::All,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

/// Security index together with the mode that attains it.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    pub index: SecurityIndex,
    /// Position in [`SecurityAnalysis::basis`] of the minimizing mode.
    pub certificate: Option<usize>,
}

/// An undetectable attack: from `x1` under attack the outputs equal those from
/// `x2 = 0` without attack.
#[derive(Debug, Clone)]
pub struct UndetectableAttack {
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
    /// `a(k)` for `k = 0..horizon`, each of length `p`.
    pub signal: Vec<DVector<f64>>,
}

/// Mode-level security analysis of a fixed system.
#[derive(Debug, Clone)]
pub struct SecurityAnalysis<'a> {
    system: &'a MultiAgentSystem,
    options: AnalysisOptions,
    basis: EigenmodeBasis,
    /// Basis positions of the modes under analysis.
    active: Vec<usize>,
    lifted: Vec<CVector>,
    threshold: f64,
}

impl<'a> SecurityAnalysis<'a> {
    pub fn new(system: &'a MultiAgentSystem, options: AnalysisOptions) -> Result<Self> {
        let basis = eigenmode_basis(system.model(), system.agent_count(), options.basis)?;
        let threshold = options.zero_tol * system.c_bar().norm();
        let mut active = Vec::new();
        let mut lifted = Vec::new();
        for (pos, mode) in basis.modes().iter().enumerate() {
            if options.filter == ModeFilter::Unstable && mode.eigenvalue.norm() < 1.0 - 1e-9 {
                continue;
            }
            let v = mode.lifted(system.agent_count());
            // A mode no agent sees cannot carry a nonzero attack signal.
            if linalg::norm_c(&linalg::mul_real_complex(system.c_bar(), &v)) <= threshold {
                continue;
            }
            active.push(pos);
            lifted.push(v);
        }
        Ok(Self {
            system,
            options,
            basis,
            active,
            lifted,
            threshold,
        })
    }

    pub fn system(&self) -> &MultiAgentSystem {
        self.system
    }

    pub fn options(&self) -> AnalysisOptions {
        self.options
    }

    pub fn basis(&self) -> &EigenmodeBasis {
        &self.basis
    }

    /// Basis positions of the modes that pass the filter and are visible to some agent.
    pub fn active_modes(&self) -> &[usize] {
        &self.active
    }

    fn sees(&self, m: &DMatrix<f64>, v: &CVector) -> bool {
        m.nrows() > 0 && linalg::norm_c(&linalg::mul_real_complex(m, v)) > self.threshold
    }

    /// True iff no analysed mode lies in `ker C̄_S`.
    pub fn is_detectable(&self, secure: &[usize]) -> bool {
        let cs = self.system.stacked_measurements(secure);
        self.lifted.iter().all(|v| self.sees(&cs, v))
    }

    /// Minimum over modes in `ker C̄_S` of the number of normal agents `i` with
    /// `C̄_{{i}∪S} v ≠ 0`.
    pub fn security_index(&self, measure: &SecurityMeasure) -> Result<IndexReport> {
        let n = self.system.agent_count();
        if measure.agent_count() != n {
            return Err(Error::DimensionMismatch(alloc::format!(
                "measure has {} agents, system has {n}",
                measure.agent_count()
            )));
        }
        let secure = measure.secure_set();
        let cs = self.system.stacked_measurements(&secure);
        let normal = measure.normal_set();
        let augmented: Vec<DMatrix<f64>> = normal
            .iter()
            .map(|&i| {
                let mut set = Vec::with_capacity(secure.len() + 1);
                set.push(i);
                set.extend_from_slice(&secure);
                self.system.stacked_measurements(&set)
            })
            .collect();
        let mut best: Option<(usize, usize)> = None;
        for (k, v) in self.lifted.iter().enumerate() {
            if self.sees(&cs, v) {
                continue;
            }
            let count = augmented.iter().filter(|m| self.sees(m, v)).count();
            if best.is_none_or(|(c, _)| count < c) {
                best = Some((count, self.active[k]));
            }
        }
        Ok(match best {
            Some((count, mode)) => IndexReport {
                index: SecurityIndex::Finite(count),
                certificate: Some(mode),
            },
            None => IndexReport {
                index: SecurityIndex::Infinite,
                certificate: None,
            },
        })
    }

    /// 0/1 matrix with one row per analysed mode: entry `(row, r)` is 1 iff `C_r v ≠ 0`.
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let n = self.system.agent_count();
        let mut h = DMatrix::<i64>::zeros(self.lifted.len(), n);
        for (row, v) in self.lifted.iter().enumerate() {
            for r in 0..n {
                if self.sees(self.system.c(r), v) {
                    h[(row, r)] = 1;
                }
            }
        }
        IncidenceMatrix::new(h, self.active.clone())
    }

    /// Orthonormal basis of `ker Ō_S` where `Ō_S = [C̄_S; C̄_S Ā; …; C̄_S Ā^{nN-1}]`.
    pub fn unobservable_subspace(&self, secure: &[usize]) -> DMatrix<f64> {
        let nn = self.system.lifted_dim();
        let cs = self.system.stacked_measurements(secure);
        if cs.nrows() == 0 {
            return DMatrix::identity(nn, nn);
        }
        let rows = cs.nrows();
        let mut obs = DMatrix::zeros(rows * nn, nn);
        let mut block = cs;
        for k in 0..nn {
            obs.view_mut((k * rows, 0), (rows, nn)).copy_from(&block);
            block = &block * self.system.a_bar();
        }
        linalg::real_null_space(&obs, 1e-9)
    }

    /// Builds `a(k) = -C̄ Ā^k x¹(0)` on the normal agents for `k < horizon`.
    /// Without `x1`, the first basis vector of `ker Ō_S` is used.
    pub fn synthesize_undetectable_attack(
        &self,
        measure: &SecurityMeasure,
        horizon: usize,
        x1: Option<DVector<f64>>,
    ) -> Result<UndetectableAttack> {
        let secure = measure.secure_set();
        let kernel = self.unobservable_subspace(&secure);
        if kernel.ncols() == 0 {
            return Err(Error::NoUndetectableAttack);
        }
        let nn = self.system.lifted_dim();
        let x1 = match x1 {
            Some(x) => {
                if x.len() != nn {
                    return Err(Error::DimensionMismatch(alloc::format!(
                        "x1 has length {}, expected {nn}",
                        x.len()
                    )));
                }
                let residual = &x - &kernel * (kernel.transpose() * &x);
                if x.norm() == 0.0 || residual.norm() > 1e-8 * x.norm() {
                    return Err(Error::InvalidInput(
                        "x1 is not a nonzero vector of the unobservable subspace".into(),
                    ));
                }
                x
            }
            None => kernel.column(0).into_owned(),
        };
        Ok(self.attack_from(measure, horizon, x1))
    }

    /// Attack whose initial state is the analysed mode `mode` projected onto `ker Ō_S`.
    pub fn attack_witness(&self, measure: &SecurityMeasure, mode: usize, horizon: usize) -> Result<UndetectableAttack> {
        let kernel = self.unobservable_subspace(&measure.secure_set());
        if kernel.ncols() == 0 {
            return Err(Error::NoUndetectableAttack);
        }
        let m = self
            .basis
            .modes()
            .get(mode)
            .ok_or_else(|| Error::InvalidInput(alloc::format!("mode {mode} out of range")))?;
        let v = m.lifted(self.system.agent_count());
        let re = v.map(|z| z.re);
        let im = v.map(|z| z.im);
        let seed = if re.norm() >= im.norm() { re } else { im };
        let mut x1 = &kernel * (kernel.transpose() * &seed);
        if x1.norm() <= 1e-9 * seed.norm() {
            x1 = kernel.column(0).into_owned();
        }
        let norm = x1.norm();
        Ok(self.attack_from(measure, horizon, x1 / norm))
    }

    fn attack_from(&self, measure: &SecurityMeasure, horizon: usize, x1: DVector<f64>) -> UndetectableAttack {
        let nn = self.system.lifted_dim();
        let mut signal = Vec::with_capacity(horizon);
        let mut state = x1.clone();
        for _ in 0..horizon {
            let mut a = -(self.system.c_bar() * &state);
            for i in measure.secure_set() {
                a.rows_range_mut(self.system.output_block(i)).fill(0.0);
            }
            signal.push(a);
            state = self.system.a_bar() * state;
        }
        UndetectableAttack {
            x1,
            x2: DVector::zeros(nn),
            signal,
        }
    }
}
