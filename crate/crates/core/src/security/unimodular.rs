//! Total unimodularity test.
//!
//! The matrix is first reduced (zero, duplicate and unit rows/columns do not
//! change the verdict), then checked against cheap sufficient conditions, and
//! only then exhaustively over all square subdeterminants within a work cap.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::enumerate::next_combination;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TuOptions {
    /// Largest column count (after reduction) accepted by the exhaustive check.
    pub max_cols: usize,
    /// Largest number of square submatrices the exhaustive check may visit.
    pub max_submatrices: u128,
}

impl Default for TuOptions {
    fn default() -> Self {
        Self {
            max_cols: 18,
            max_submatrices: 20_000_000,
        }
    }
}

/// Whether every square submatrix of `h` has determinant in {-1, 0, 1}.
pub fn is_totally_unimodular(h: &DMatrix<i64>) -> Result<bool> {
    is_totally_unimodular_with(h, TuOptions::default())
}

pub fn is_totally_unimodular_with(h: &DMatrix<i64>, opts: TuOptions) -> Result<bool> {
    if h.iter().any(|&x| !(-1..=1).contains(&x)) {
        return Ok(false);
    }
    let m = reduce(h);
    if m.is_empty() || m[0].is_empty() {
        return Ok(true);
    }
    let t = transpose(&m);
    if consecutive_ones(&m) || consecutive_ones(&t) {
        return Ok(true);
    }
    if two_per_column_balanced(&m) || two_per_column_balanced(&t) {
        return Ok(true);
    }
    exhaustive(&m, opts)
}

type Rows = Vec<Vec<i64>>;

fn transpose(m: &Rows) -> Rows {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|c| m.iter().map(|r| r[c]).collect()).collect()
}

fn nonzeros(v: &[i64]) -> usize {
    v.iter().filter(|&&x| x != 0).count()
}

fn same_up_to_sign(a: &[i64], b: &[i64]) -> bool {
    a == b || a.iter().zip(b).all(|(x, y)| *x == -*y)
}

/// Drops rows with at most one nonzero and rows that repeat an earlier row up to
/// sign. Appending such rows preserves total unimodularity in both directions.
fn reduce_rows(m: &Rows) -> Rows {
    let mut out: Rows = Vec::new();
    for r in m {
        if nonzeros(r) <= 1 || out.iter().any(|o| same_up_to_sign(o, r)) {
            continue;
        }
        out.push(r.clone());
    }
    out
}

fn reduce(h: &DMatrix<i64>) -> Rows {
    let mut m: Rows = (0..h.nrows()).map(|r| h.row(r).iter().copied().collect()).collect();
    loop {
        let before = (m.len(), m.first().map_or(0, Vec::len));
        m = reduce_rows(&m);
        let t = reduce_rows(&transpose(&m));
        m = transpose(&t);
        if t.is_empty() {
            return Vec::new();
        }
        let after = (m.len(), m.first().map_or(0, Vec::len));
        if before == after {
            return m;
        }
    }
}

/// 0/1 matrices whose rows are intervals are TU.
fn consecutive_ones(m: &Rows) -> bool {
    m.iter().all(|row| {
        if row.iter().any(|&x| x != 0 && x != 1) {
            return false;
        }
        let first = row.iter().position(|&x| x == 1);
        let last = row.iter().rposition(|&x| x == 1);
        match (first, last) {
            (Some(f), Some(l)) => row[f..=l].iter().all(|&x| x == 1),
            _ => true,
        }
    })
}

/// At most two nonzeros per column, and the rows split into two classes so that
/// equal-sign pairs straddle the classes and opposite-sign pairs share one.
/// This covers bipartite-graph incidence matrices.
#[allow(clippy::needless_range_loop)]
fn two_per_column_balanced(m: &Rows) -> bool {
    let rows = m.len();
    let cols = m[0].len();
    // Edge (r1, r2, parity): parity 1 forces different classes.
    let mut adj: Vec<Vec<(usize, u8)>> = vec![Vec::new(); rows];
    for c in 0..cols {
        let nz: Vec<usize> = (0..rows).filter(|&r| m[r][c] != 0).collect();
        match nz.len() {
            0 | 1 => {}
            2 => {
                let parity = u8::from(m[nz[0]][c] == m[nz[1]][c]);
                adj[nz[0]].push((nz[1], parity));
                adj[nz[1]].push((nz[0], parity));
            }
            _ => return false,
        }
    }
    let mut class: Vec<Option<u8>> = vec![None; rows];
    for start in 0..rows {
        if class[start].is_some() {
            continue;
        }
        class[start] = Some(0);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            let cu = class[u].unwrap_or(0);
            for &(v, parity) in &adj[u] {
                let want = cu ^ parity;
                match class[v] {
                    None => {
                        class[v] = Some(want);
                        stack.push(v);
                    }
                    Some(cv) if cv != want => return false,
                    Some(_) => {}
                }
            }
        }
    }
    true
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

fn exhaustive(m: &Rows, opts: TuOptions) -> Result<bool> {
    let rows = m.len();
    let cols = m[0].len();
    let small = rows.min(cols);
    let work: u128 = (2..=small).map(|k| binomial(rows, k) * binomial(cols, k)).sum();
    if cols > opts.max_cols || work > opts.max_submatrices {
        return Err(Error::MatrixTooLargeForExactTest { rows, cols });
    }
    let mut buf = vec![0i64; small * small];
    for k in 2..=small {
        let mut cs: Vec<usize> = (0..k).collect();
        loop {
            let mut rs: Vec<usize> = (0..k).collect();
            loop {
                for (a, &r) in rs.iter().enumerate() {
                    for (b, &c) in cs.iter().enumerate() {
                        buf[a * k + b] = m[r][c];
                    }
                }
                let d = bareiss_det(&mut buf[..k * k], k);
                if !(-1..=1).contains(&d) {
                    return Ok(false);
                }
                if !next_combination(&mut rs, rows) {
                    break;
                }
            }
            if !next_combination(&mut cs, cols) {
                break;
            }
        }
    }
    Ok(true)
}

/// Fraction-free Gaussian elimination; exact for integer matrices.
fn bareiss_det(a: &mut [i64], n: usize) -> i64 {
    let mut sign = 1;
    let mut prev = 1i64;
    for k in 0..n.saturating_sub(1) {
        if a[k * n + k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| a[r * n + k] != 0) else {
                return 0;
            };
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = (a[i * n + j] * pivot - a[i * n + k] * a[k * n + j]) / prev;
            }
        }
        prev = pivot;
    }
    sign * a[(n - 1) * n + (n - 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: usize, cols: usize, v: &[i64]) -> DMatrix<i64> {
        DMatrix::from_row_slice(rows, cols, v)
    }

    #[test]
    fn identity_is_tu() {
        assert!(is_totally_unimodular(&DMatrix::identity(4, 4)).unwrap());
    }

    #[test]
    fn hadamard_2x2_is_not() {
        assert!(!is_totally_unimodular(&mat(2, 2, &[1, 1, 1, -1])).unwrap());
    }

    #[test]
    fn odd_cycle_incidence_is_not() {
        // Edge-vertex incidence of a triangle: determinant 2.
        let h = mat(3, 3, &[1, 1, 0, 0, 1, 1, 1, 0, 1]);
        assert!(!is_totally_unimodular(&h).unwrap());
    }

    #[test]
    fn bareiss_matches_cofactor() {
        let mut a = [2, -1, 0, 1, 3, 2, 0, 1, 4];
        // 2(12-2) + 1(4-0) = 24
        assert_eq!(bareiss_det(&mut a, 3), 24);
        let mut b = [0, 1, 1, 0];
        assert_eq!(bareiss_det(&mut b, 2), -1);
    }

    #[test]
    fn cap_reports_unknown() {
        // Dense non-structured 0/1 matrix with more columns than the cap.
        let n = 20;
        let h = DMatrix::from_fn(n, n, |r, c| i64::from((r * 7 + c * 3) % 5 < 3 && r != c));
        let opts = TuOptions {
            max_cols: 18,
            max_submatrices: u128::MAX,
        };
        assert!(matches!(
            is_totally_unimodular_with(&h, opts),
            Err(Error::MatrixTooLargeForExactTest { .. })
        ));
    }
}
