//! Dense-tableau primal simplex with Bland's rule, plus the covering LP built on it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

use super::incidence::IncidenceMatrix;
use super::measure::CostModel;

const PIVOT_EPS: f64 = 1e-9;
/// Distance from {0, 1} below which a vertex coordinate is treated as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Maximizes `gain · z` subject to `lhs z <= rhs`, `z >= 0`, where `rhs >= 0` so
/// the origin is a feasible starting vertex. Returns `(z, value)` at an optimal
/// basic solution. The covering LP is always bounded, so unboundedness is
/// reported as invalid input.
pub fn maximize(gain: &[f64], lhs: &[Vec<f64>], rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = gain.len();
    let m = lhs.len();
    if rhs.len() != m || lhs.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch("simplex tableau shape".into()));
    }
    if rhs.iter().any(|&b| b < 0.0) {
        return Err(Error::InvalidInput(
            "simplex needs a nonnegative right-hand side".into(),
        ));
    }
    let width = n + m + 1;
    // Row i < m: constraint i with slack n+i; last row: reduced costs (negated gain).
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&lhs[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = rhs[i];
    }
    for j in 0..n {
        t[m][j] = -gain[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // Bland: entering variable is the lowest index with negative reduced cost.
    while let Some(enter) = (0..n + m).find(|&j| t[m][j] < -PIVOT_EPS) {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][enter] > PIVOT_EPS {
                let ratio = t[i][width - 1] / t[i][enter];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && basis[i] < basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Err(Error::InvalidInput("linear program is unbounded".into()));
        };
        pivot(&mut t, row, enter);
        basis[row] = enter;
    }
    let mut z = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            z[bv] = t[i][width - 1];
        }
    }
    Ok((z, t[m][width - 1]))
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    for x in t[row].iter_mut() {
        *x /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for (x, &pr) in r.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            r[col] = 0.0;
        }
    }
}

/// LP relaxation of the covering problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    /// Optimal vertex of `{b ∈ [0,1]^N : H b >= 1}` as returned by the simplex.
    pub vertex: Vec<f64>,
    /// Optimal cost.
    pub value: f64,
    /// Integral optimum after rounding, refined toward the preferred tie-break.
    pub indicator: Vec<bool>,
}

/// Solves `min cost(b)` over `b ∈ [0,1]^N` with `H b >= 1`, substituting fixed
/// values for agents in `fixed` (`Some(true)` = secure). Returns `None` when
/// infeasible.
fn covering_lp(h: &IncidenceMatrix, costs: &CostModel, fixed: &[Option<bool>]) -> Result<Option<(Vec<f64>, f64)>> {
    let hm = h.matrix();
    let n = h.agents();
    let free: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
    let delta: Vec<f64> = (0..n).map(|j| costs.secure()[j] - costs.normal()[j]).collect();
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for l in 0..h.rows() {
        let covered: i64 = (0..n).filter(|&j| fixed[j] == Some(true)).map(|j| hm[(l, j)]).sum();
        let need = 1 - covered;
        if need <= 0 {
            continue;
        }
        // With b = 1 - z on the free agents: Σ H z <= Σ H - need.
        let row: Vec<f64> = free.iter().map(|&j| hm[(l, j)] as f64).collect();
        let slack = row.iter().sum::<f64>() - need as f64;
        if slack < 0.0 {
            return Ok(None);
        }
        lhs.push(row);
        rhs.push(slack);
    }
    for k in 0..free.len() {
        let mut row = vec![0.0; free.len()];
        row[k] = 1.0;
        lhs.push(row);
        rhs.push(1.0);
    }
    let gain: Vec<f64> = free.iter().map(|&j| delta[j]).collect();
    let (z, saved) = maximize(&gain, &lhs, &rhs)?;
    let mut b = vec![0.0; n];
    for j in 0..n {
        if let Some(v) = fixed[j] {
            b[j] = f64::from(u8::from(v));
        }
    }
    for (k, &j) in free.iter().enumerate() {
        b[j] = (1.0 - z[k]).clamp(0.0, 1.0);
    }
    let full: f64 = costs
        .secure()
        .iter()
        .zip(0..n)
        .map(|(&cs, j)| match fixed[j] {
            Some(false) => costs.normal()[j],
            _ => cs,
        })
        .sum();
    Ok(Some((b, full - saved)))
}

fn integral(b: &[f64]) -> bool {
    b.iter().all(|&x| x.min((1.0 - x).abs()).abs() <= INTEGRALITY_TOL)
}

fn round(b: &[f64]) -> Vec<bool> {
    b.iter().map(|&x| x > 0.5).collect()
}

/// Relaxed covering LP. Fails with `Infeasible` on a zero row of `H` and with
/// `NonIntegralVertex` when the simplex lands on a fractional vertex.
pub fn solve_relaxed_security_lp(h: &IncidenceMatrix, costs: &CostModel) -> Result<RelaxedSolution> {
    let n = h.agents();
    if costs.agent_count() != n {
        return Err(Error::DimensionMismatch(alloc::format!(
            "H has {n} columns, cost model has {} agents",
            costs.agent_count()
        )));
    }
    let hm = h.matrix();
    if hm.iter().any(|&x| x != 0 && x != 1) {
        return Err(Error::InvalidInput("incidence matrix must be 0/1".into()));
    }
    if let Some(row) = (0..h.rows()).find(|&l| (0..n).all(|j| hm[(l, j)] == 0)) {
        return Err(Error::Infeasible { row });
    }
    let mut fixed = vec![None; n];
    let (vertex, value) = covering_lp(h, costs, &fixed)?.ok_or(Error::Infeasible { row: 0 })?;
    if !integral(&vertex) {
        return Err(Error::NonIntegralVertex { vertex });
    }
    let tol = 1e-7 * value.abs().max(1.0);
    for i in 0..n {
        fixed[i] = Some(true);
        let keep = match covering_lp(h, costs, &fixed)? {
            Some((b, v)) => v <= value + tol && integral(&b),
            None => false,
        };
        if !keep {
            fixed[i] = Some(false);
        }
    }
    let refined: Vec<bool> = fixed.iter().map(|f| *f == Some(true)).collect();
    let refined_cost = costs.indicator_cost(&refined.iter().map(|&x| f64::from(u8::from(x))).collect::<Vec<_>>())?;
    let indicator = if h.cover_counts(&refined).iter().all(|&c| c >= 1) && refined_cost <= value + tol {
        refined
    } else {
        round(&vertex)
    };
    if h.cover_counts(&indicator).iter().any(|&c| c < 1) {
        return Err(Error::NonIntegralVertex { vertex });
    }
    Ok(RelaxedSolution {
        vertex,
        value,
        indicator,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn textbook_lp() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let (z, v) = maximize(
            &[3.0, 5.0],
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            &[4.0, 12.0, 18.0],
        )
        .unwrap();
        assert!((z[0] - 2.0).abs() < 1e-12 && (z[1] - 6.0).abs() < 1e-12);
        assert!((v - 36.0).abs() < 1e-12);
    }

    #[test]
    fn identity_pattern_needs_everyone() {
        let h = IncidenceMatrix::from_matrix(DMatrix::identity(3, 3));
        let costs = CostModel::uniform(3, 1.0, 2.0, 100.0).unwrap();
        let sol = solve_relaxed_security_lp(&h, &costs).unwrap();
        assert_eq!(sol.indicator, vec![true; 3]);
        assert!((sol.value - 6.0).abs() < 1e-9);
    }

    #[test]
    fn cheapest_covering_column() {
        let h = IncidenceMatrix::from_matrix(DMatrix::from_row_slice(3, 3, &[1, 1, 0, 0, 1, 1, 1, 1, 0]));
        let costs = CostModel::new(vec![1.0; 3], vec![5.0, 2.0, 5.0], 100.0).unwrap();
        let sol = solve_relaxed_security_lp(&h, &costs).unwrap();
        assert_eq!(sol.indicator, vec![false, true, false]);
    }

    #[test]
    fn zero_row_is_infeasible() {
        let h = IncidenceMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[1, 0, 0, 0]));
        let costs = CostModel::uniform(2, 1.0, 2.0, 10.0).unwrap();
        assert_eq!(
            solve_relaxed_security_lp(&h, &costs).unwrap_err(),
            Error::Infeasible { row: 1 }
        );
    }

    #[test]
    fn odd_cycle_gives_fractional_vertex() {
        let h = IncidenceMatrix::from_matrix(DMatrix::from_row_slice(3, 3, &[1, 1, 0, 0, 1, 1, 1, 0, 1]));
        let costs = CostModel::uniform(3, 1.0, 2.0, 10.0).unwrap();
        assert!(matches!(
            solve_relaxed_security_lp(&h, &costs),
            Err(Error::NonIntegralVertex { .. })
        ));
    }
}
