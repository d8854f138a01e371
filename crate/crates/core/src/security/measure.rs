use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Per-agent security choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentType {
    Normal,
    Secure,
}

impl AgentType {
    pub fn letter(self) -> char {
        match self {
            AgentType::Normal => 'N',
            AgentType::Secure => 'S',
        }
    }
}

/// Assignment of [`AgentType`] to every agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SecurityMeasure {
    phi: Vec<AgentType>,
}

impl SecurityMeasure {
    pub fn new(phi: Vec<AgentType>) -> Self {
        Self { phi }
    }

    pub fn all_normal(n: usize) -> Self {
        Self::new(vec![AgentType::Normal; n])
    }

    pub fn all_secure(n: usize) -> Self {
        Self::new(vec![AgentType::Secure; n])
    }

    /// Builds a measure from zero-based secure agent indices.
    pub fn from_secure_set(n: usize, secure: &[usize]) -> Result<Self> {
        let mut phi = vec![AgentType::Normal; n];
        for &i in secure {
            if i >= n {
                return Err(Error::InvalidInput(format!("agent {i} out of range for N = {n}")));
            }
            phi[i] = AgentType::Secure;
        }
        Ok(Self { phi })
    }

    pub fn from_indicator(b: &[bool]) -> Self {
        Self::new(
            b.iter()
                .map(|&s| if s { AgentType::Secure } else { AgentType::Normal })
                .collect(),
        )
    }

    pub fn agent_count(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self) -> &[AgentType] {
        &self.phi
    }

    pub fn is_secure(&self, i: usize) -> bool {
        self.phi[i] == AgentType::Secure
    }

    pub fn secure_set(&self) -> Vec<usize> {
        (0..self.phi.len()).filter(|&i| self.is_secure(i)).collect()
    }

    pub fn normal_set(&self) -> Vec<usize> {
        (0..self.phi.len()).filter(|&i| !self.is_secure(i)).collect()
    }

    pub fn indicator(&self) -> Vec<bool> {
        self.phi.iter().map(|&t| t == AgentType::Secure).collect()
    }
}

impl fmt::Display for SecurityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.phi {
            write!(f, "{}", t.letter())?;
        }
        Ok(())
    }
}

impl FromStr for SecurityMeasure {
    type Err = Error;

    /// Parses strings such as `"SNSNS"` (case-insensitive).
    fn from_str(s: &str) -> Result<Self> {
        let phi = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'S' => Ok(AgentType::Secure),
                'N' => Ok(AgentType::Normal),
                other => Err(Error::InvalidInput(format!("bad agent type '{other}' in \"{s}\""))),
            })
            .collect::<Result<Vec<_>>>()?;
        if phi.is_empty() {
            return Err(Error::InvalidInput(String::from("empty security measure")));
        }
        Ok(Self { phi })
    }
}

/// Per-agent normal/secure costs and the total budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    normal: Vec<f64>,
    secure: Vec<f64>,
    budget: f64,
}

impl CostModel {
    pub fn new(normal: Vec<f64>, secure: Vec<f64>, budget: f64) -> Result<Self> {
        if normal.len() != secure.len() || normal.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "{} normal costs vs {} secure costs",
                normal.len(),
                secure.len()
            )));
        }
        for (i, (&cn, &cs)) in normal.iter().zip(&secure).enumerate() {
            if !(cn.is_finite() && cs.is_finite() && cn > 0.0 && cn < cs) {
                return Err(Error::InvalidInput(format!(
                    "agent {}: need 0 < normal cost < secure cost, got {cn} and {cs}",
                    i + 1
                )));
            }
        }
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::InvalidInput(format!("budget must be positive, got {budget}")));
        }
        Ok(Self { normal, secure, budget })
    }

    pub fn uniform(n: usize, normal: f64, secure: f64, budget: f64) -> Result<Self> {
        Self::new(vec![normal; n], vec![secure; n], budget)
    }

    pub fn agent_count(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn secure(&self) -> &[f64] {
        &self.secure
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        Self::new(self.normal.clone(), self.secure.clone(), budget)
    }

    /// Cost of the all-normal measure.
    pub fn base_cost(&self) -> f64 {
        self.normal.iter().sum()
    }

    /// Fails with `InfeasibleBudget` if even the all-normal measure is unaffordable.
    pub fn check_budget(&self) -> Result<()> {
        let base = self.base_cost();
        if self.budget < base {
            return Err(Error::InfeasibleBudget {
                budget: self.budget,
                base,
            });
        }
        Ok(())
    }

    /// `(c_N, c_S)` when every agent shares the same costs.
    pub fn common(&self) -> Option<(f64, f64)> {
        let (cn, cs) = (self.normal[0], self.secure[0]);
        let same = self.normal.iter().all(|&c| c == cn) && self.secure.iter().all(|&c| c == cs);
        same.then_some((cn, cs))
    }

    pub fn is_common(&self) -> bool {
        self.common().is_some()
    }

    /// Cost of a measure: normal costs over normal agents plus secure costs over secure agents.
    pub fn total_cost(&self, measure: &SecurityMeasure) -> Result<f64> {
        self.check_len(measure.agent_count())?;
        Ok(measure
            .phi()
            .iter()
            .enumerate()
            .map(|(i, t)| match t {
                AgentType::Normal => self.normal[i],
                AgentType::Secure => self.secure[i],
            })
            .sum())
    }

    /// Cost as a function of a real indicator: `Σ c_N + Σ (c_S - c_N) b`.
    pub fn indicator_cost(&self, b: &[f64]) -> Result<f64> {
        self.check_len(b.len())?;
        Ok(self
            .normal
            .iter()
            .zip(&self.secure)
            .zip(b)
            .map(|((&cn, &cs), &bi)| cn + (cs - cn) * bi)
            .sum())
    }

    pub fn affordable(&self, measure: &SecurityMeasure) -> Result<bool> {
        Ok(self.total_cost(measure)? <= self.budget + budget_slack(self.budget))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.agent_count() {
            return Err(Error::DimensionMismatch(format!(
                "measure has {n} agents, cost model has {}",
                self.agent_count()
            )));
        }
        Ok(())
    }
}

/// Round-off allowance when comparing a cost sum against the budget.
pub(crate) fn budget_slack(budget: f64) -> f64 {
    1e-9 * budget.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_normal_cost() {
        let costs = CostModel::uniform(5, 1.0, 30.0, 150.0).unwrap();
        assert_eq!(costs.total_cost(&SecurityMeasure::all_normal(5)).unwrap(), 5.0);
    }

    #[test]
    fn alternating_cost() {
        let costs = CostModel::uniform(5, 1.0, 30.0, 150.0).unwrap();
        let m: SecurityMeasure = "SNSNS".parse().unwrap();
        assert_eq!(costs.total_cost(&m).unwrap(), 92.0);
        assert_eq!(costs.indicator_cost(&[1.0, 0.0, 1.0, 0.0, 1.0]).unwrap(), 92.0);
    }

    #[test]
    fn single_secure_matches_indicator_cost() {
        let costs = CostModel::new(vec![1.0, 2.0, 3.0], vec![4.0, 7.0, 9.0], 20.0).unwrap();
        let m = SecurityMeasure::from_secure_set(3, &[0]).unwrap();
        assert_eq!(costs.total_cost(&m).unwrap(), 9.0);
        assert_eq!(costs.indicator_cost(&[1.0, 0.0, 0.0]).unwrap(), 9.0);
    }

    #[test]
    fn parse_round_trip() {
        let m: SecurityMeasure = "snNs".parse().unwrap();
        assert_eq!(m.secure_set(), vec![0, 3]);
        assert_eq!(alloc::format!("{m}"), "SNNS");
        assert!("SX".parse::<SecurityMeasure>().is_err());
    }

    #[test]
    fn rejects_inverted_costs() {
        assert!(CostModel::uniform(2, 3.0, 2.0, 10.0).is_err());
    }
}
