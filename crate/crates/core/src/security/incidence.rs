use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Mode-to-agent visibility matrix `H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidenceMatrix {
    h: DMatrix<i64>,
    modes: Vec<usize>,
}

impl IncidenceMatrix {
    /// `modes[row]` names the basis position behind each row.
    pub fn new(h: DMatrix<i64>, modes: Vec<usize>) -> Self {
        debug_assert_eq!(h.nrows(), modes.len());
        Self { h, modes }
    }

    /// Wraps a bare matrix; rows are labelled `0..rows`.
    pub fn from_matrix(h: DMatrix<i64>) -> Self {
        let modes = (0..h.nrows()).collect();
        Self { h, modes }
    }

    pub fn matrix(&self) -> &DMatrix<i64> {
        &self.h
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn rows(&self) -> usize {
        self.h.nrows()
    }

    pub fn agents(&self) -> usize {
        self.h.ncols()
    }

    /// `H b` for a 0/1 indicator.
    pub fn cover_counts(&self, b: &[bool]) -> Vec<i64> {
        (0..self.h.nrows())
            .map(|r| (0..self.h.ncols()).filter(|&c| b[c]).map(|c| self.h[(r, c)]).sum())
            .collect()
    }
}

/// True iff `H b >= 1` row-wise.
pub fn check_max_resilience(h: &IncidenceMatrix, b: &[bool]) -> Result<bool> {
    if b.len() != h.agents() {
        return Err(Error::DimensionMismatch(format!(
            "indicator has {} entries, H has {} columns",
            b.len(),
            h.agents()
        )));
    }
    Ok(h.cover_counts(b).into_iter().all(|c| c >= 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_indicator_never_covers() {
        let h = IncidenceMatrix::from_matrix(DMatrix::from_element(3, 2, 1));
        assert!(!check_max_resilience(&h, &[false, false]).unwrap());
        assert!(check_max_resilience(&h, &[false, true]).unwrap());
    }
}
