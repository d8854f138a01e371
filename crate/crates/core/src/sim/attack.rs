use alloc::collections::BTreeMap;
use alloc::format;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::MultiAgentSystem;

#[derive(Debug, Clone, PartialEq)]
pub enum AttackKind {
    /// `a_i = -C_i x`, which drives the measured output to the noise alone.
    Zeroing,
    /// Constant offset added to the agent's output.
    Bias(DVector<f64>),
    /// Explicit values per step; steps without an entry inject nothing.
    Sequence(BTreeMap<usize, DVector<f64>>),
}

/// Sensor injection on one agent over the inclusive window `start..=end`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub target: usize,
    pub kind: AttackKind,
    pub start: usize,
    pub end: usize,
}

impl AttackSpec {
    pub fn is_active(&self, k: usize) -> bool {
        (self.start..=self.end).contains(&k)
    }

    pub fn validate(&self, system: &MultiAgentSystem, horizon: usize) -> Result<()> {
        if self.target >= system.agent_count() {
            return Err(Error::InvalidInput(format!(
                "attack target {} out of range for {} agents",
                self.target + 1,
                system.agent_count()
            )));
        }
        if self.start > self.end || self.end >= horizon {
            return Err(Error::InvalidInput(format!(
                "attack window [{}, {}] must lie within [0, {})",
                self.start, self.end, horizon
            )));
        }
        let p = system.agent_output_dim(self.target);
        let bad = match &self.kind {
            AttackKind::Zeroing => false,
            AttackKind::Bias(c) => c.len() != p,
            AttackKind::Sequence(seq) => seq.values().any(|a| a.len() != p),
        };
        if bad {
            return Err(Error::DimensionMismatch(format!(
                "attack on agent {} must have length {p}",
                self.target + 1
            )));
        }
        Ok(())
    }
}

/// Injected signal on the target's output block at step `k`, if any. Masking on
/// secure agents is the caller's job.
pub fn inject_attack(spec: &AttackSpec, x: &DVector<f64>, system: &MultiAgentSystem, k: usize) -> Option<DVector<f64>> {
    if !spec.is_active(k) {
        return None;
    }
    match &spec.kind {
        AttackKind::Zeroing => Some(-(system.c(spec.target) * x)),
        AttackKind::Bias(c) => Some(c.clone()),
        AttackKind::Sequence(seq) => seq.get(&k).cloned(),
    }
}
