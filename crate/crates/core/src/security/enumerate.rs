use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

use super::analysis::SecurityIndex;
use super::incidence::IncidenceMatrix;
use super::measure::CostModel;

/// Advances `combo` (strictly increasing indices below `n`) to the next
/// combination in lexicographic order. Returns false after the last one.
pub fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Indicators with at most `max_secure` ones, by cardinality then lexicographically.
#[derive(Debug, Clone)]
pub struct BudgetFeasible {
    agents: usize,
    max_secure: Option<usize>,
    current: Option<Vec<usize>>,
}

impl BudgetFeasible {
    /// Largest number of secure agents the budget allows, if any.
    pub fn max_secure(&self) -> Option<usize> {
        self.max_secure
    }
}

impl Iterator for BudgetFeasible {
    type Item = Vec<bool>;

    fn next(&mut self) -> Option<Vec<bool>> {
        let max = self.max_secure?;
        let combo = self.current.as_mut()?;
        let mut b = vec![false; self.agents];
        for &i in combo.iter() {
            b[i] = true;
        }
        if !next_combination(combo, self.agents) {
            let k = combo.len() + 1;
            self.current = (k <= max).then(|| (0..k).collect());
        }
        Some(b)
    }
}

/// Every indicator whose cost fits the budget, assuming costs shared by all agents.
/// The cardinality bound is `(β - N c_N) / (c_S - c_N)`.
pub fn enumerate_budget_feasible(costs: &CostModel) -> Result<BudgetFeasible> {
    let (cn, cs) = costs.common().ok_or(Error::RequiresCommonCosts)?;
    let n = costs.agent_count();
    let bound = (costs.budget() - n as f64 * cn) / (cs - cn);
    let max_secure = if bound < -1e-9 {
        None
    } else {
        Some((libm::floor(bound + 1e-9) as usize).min(n))
    };
    Ok(BudgetFeasible {
        agents: n,
        max_secure,
        current: max_secure.map(|_| Vec::new()),
    })
}

/// Result of the max-min selection over feasible indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiChoice {
    pub indicator: Vec<bool>,
    pub alpha: SecurityIndex,
}

/// Prefers equal-cost candidates whose indicator is lexicographically larger,
/// i.e. whose secure set starts with the lower agent index.
pub(crate) fn tie_break(a: &[bool], b: &[bool]) -> Ordering {
    a.cmp(b)
}

pub(crate) fn costs_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// For each candidate `b̄^j`, takes the minimum over rows `l` with `(H b̄^j)_l = 0`
/// of `H_l (1 - b̄^j)`; a candidate with no such row scores `Infinite`. Returns
/// the candidate with the largest score, ties broken by lower cost then
/// [`tie_break`].
pub fn maxmin_phi(h: &IncidenceMatrix, feasible: &[Vec<bool>], costs: &CostModel) -> Result<PhiChoice> {
    if feasible.is_empty() {
        return Err(Error::EmptyFeasibleSet);
    }
    let hm = h.matrix();
    let mut best: Option<(SecurityIndex, f64, &Vec<bool>)> = None;
    for b in feasible {
        if b.len() != h.agents() {
            return Err(Error::DimensionMismatch(alloc::format!(
                "indicator has {} entries, H has {} columns",
                b.len(),
                h.agents()
            )));
        }
        let psi = h.cover_counts(b);
        let score = (0..h.rows())
            .filter(|&l| psi[l] == 0)
            .map(|l| (0..h.agents()).filter(|&c| !b[c]).map(|c| hm[(l, c)]).sum::<i64>() as usize)
            .min()
            .map_or(SecurityIndex::Infinite, SecurityIndex::Finite);
        let bf: Vec<f64> = b.iter().map(|&x| f64::from(u8::from(x))).collect();
        let cost = costs.indicator_cost(&bf)?;
        let better = match &best {
            None => true,
            Some((s, c, prev)) => match score.cmp(s) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal if costs_equal(cost, *c) => tie_break(b, prev) == Ordering::Greater,
                Ordering::Equal => cost < *c,
            },
        };
        if better {
            best = Some((score, cost, b));
        }
    }
    let (alpha, _, b) = best.ok_or(Error::EmptyFeasibleSet)?;
    Ok(PhiChoice {
        indicator: b.clone(),
        alpha,
    })
}
