//! Dense helpers shared by the analysis modules.

use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix, DVector};

pub type CMatrix = DMatrix<Complex<f64>>;
pub type CVector = DVector<Complex<f64>>;

pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex::new(x, 0.0))
}

/// Induced 2-norm (largest singular value). Empty matrices have norm 0.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

pub fn norm_c(v: &CVector) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>())
}

/// `m * v` for a real matrix and a complex vector.
pub fn mul_real_complex(m: &DMatrix<f64>, v: &CVector) -> CVector {
    let re = m * v.map(|z| z.re);
    let im = m * v.map(|z| z.im);
    CVector::from_fn(m.nrows(), |i, _| Complex::new(re[i], im[i]))
}

/// Right singular vectors of `m` ordered by ascending singular value, together
/// with those singular values. Wide matrices are zero-padded so every column of
/// the domain is represented.
fn ascending_right_singular(m: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut padded = CMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let mut pairs: Vec<(f64, CVector)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, v_t.row(i).adjoint()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Orthonormal basis (as columns) of the numerical kernel of a complex matrix.
/// A singular value counts as zero when it is at most `rel_tol * sigma_max`,
/// or when the whole matrix is below `abs_floor`.
pub fn complex_null_space(m: &CMatrix, rel_tol: f64, abs_floor: f64) -> CMatrix {
    let cols = m.ncols();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return CMatrix::identity(cols, cols);
    }
    let (sv, vecs) = ascending_right_singular(m);
    let smax = sv.last().copied().unwrap_or(0.0);
    if smax <= abs_floor {
        return CMatrix::identity(cols, cols);
    }
    let thr = rel_tol * smax;
    let keep: Vec<CVector> = sv
        .iter()
        .zip(vecs)
        .filter(|(s, _)| **s <= thr)
        .map(|(_, v)| v)
        .collect();
    columns(cols, &keep)
}

/// The `count` right singular vectors with the smallest singular values.
pub fn smallest_right_singular(m: &CMatrix, count: usize) -> (Vec<f64>, CMatrix) {
    let (sv, vecs) = ascending_right_singular(m);
    let count = count.min(vecs.len());
    (sv, columns(m.ncols(), &vecs[..count]))
}

/// Orthonormal basis of the column space of `m`, keeping the `rank` dominant
/// directions.
pub fn dominant_range(m: &CMatrix, rank: usize) -> CMatrix {
    if rank == 0 || m.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let cols: Vec<CVector> = idx.iter().take(rank).map(|&i| u.column(i).into_owned()).collect();
    columns(m.nrows(), &cols)
}

/// Orthonormal kernel basis of a real matrix with threshold `rel_tol * sigma_max`.
/// An empty (zero-row) matrix has the whole space as kernel.
pub fn real_null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        return DMatrix::identity(cols, cols);
    }
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().fold(0.0_f64, |a, &s| a.max(s));
    if smax == 0.0 {
        return DMatrix::identity(cols, cols);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= rel_tol * smax)
        .collect();
    let mut out = DMatrix::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &v_t.row(i).transpose());
    }
    out
}

/// Rotates a complex vector so its largest-modulus entry is real and positive.
pub fn normalize_phase(v: &CVector) -> CVector {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs + 1e-12 {
            best = i;
            best_abs = a;
        }
    }
    if best_abs <= 0.0 {
        return v.clone();
    }
    let phase = v[best] / best_abs;
    v.map(|z| z / phase)
}

fn columns(nrows: usize, cols: &[CVector]) -> CMatrix {
    let mut m = CMatrix::zeros(nrows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Eigenvalues of a real symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

pub fn matrix_power_c(m: &CMatrix, k: usize) -> CMatrix {
    let mut out = CMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

pub fn matrix_power(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        out = &out * m;
    }
    out
}
