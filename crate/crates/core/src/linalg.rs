//! Dense linear-algebra helpers shared by the rest of the crate.
//!
//! Every rank decision uses a relative singular-value cutoff
//! `rank_tol * sigma_max`; residual checks are absolute Frobenius norms.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical tolerances used across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative singular-value cutoff for rank decisions.
    pub rank_tol: f64,
    /// Absolute residual allowed in factor solves and consistency checks.
    pub residual_tol: f64,
    /// Margin required for strict positive definiteness.
    pub eig_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rank_tol: 1e-10,
            residual_tol: 1e-9,
            eig_tol: 1e-8,
        }
    }
}

/// Returns an error naming `what` if any entry is NaN or infinite.
pub fn ensure_finite(m: &Matrix, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Builds a matrix from row-major nested vectors. Ragged input is rejected.
pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(Error::dims("matrix rows", c, bad.len()));
    }
    Ok(Matrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Row-major nested vectors, the inverse of [`from_rows`].
pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

struct Svd {
    u: Matrix,
    s: Vec<f64>,
    v_t: Matrix,
}

fn svd(m: &Matrix) -> Svd {
    let svd = m.clone().svd(true, true);
    Svd {
        u: svd.u.expect("requested U"),
        s: svd.singular_values.iter().copied().collect(),
        v_t: svd.v_t.expect("requested V^T"),
    }
}

fn cutoff(s: &[f64], tol: &Tolerance) -> f64 {
    let max = s.iter().copied().fold(0.0, f64::max);
    tol.rank_tol * max
}

/// Numerical rank of `m`.
pub fn rank(m: &Matrix, tol: &Tolerance) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = svd(m).s;
    let c = cutoff(&s, tol);
    s.iter().filter(|&&v| v > c && v > 0.0).count()
}

/// Moore-Penrose pseudo-inverse with the relative rank cutoff.
pub fn pinv(m: &Matrix, tol: &Tolerance) -> Matrix {
    if m.is_empty() {
        return Matrix::zeros(m.ncols(), m.nrows());
    }
    let Svd { u, s, v_t } = svd(m);
    let c = cutoff(&s, tol);
    let mut out = Matrix::zeros(m.ncols(), m.nrows());
    for (k, &sk) in s.iter().enumerate() {
        if sk > c && sk > 0.0 {
            out += (v_t.row(k).transpose() / sk) * u.column(k).transpose();
        }
    }
    out
}

/// Orthonormal basis of `ker m`, one vector per column.
pub fn kernel_basis(m: &Matrix, tol: &Tolerance) -> Matrix {
    let n = m.ncols();
    if n == 0 {
        return Matrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return Matrix::identity(n, n);
    }
    let padded = if m.nrows() < n {
        let mut p = Matrix::zeros(n, n);
        p.rows_mut(0, m.nrows()).copy_from(m);
        p
    } else {
        m.clone()
    };
    let Svd { s, v_t, .. } = svd(&padded);
    let c = cutoff(&s, tol);
    let cols: Vec<Vector> = s
        .iter()
        .enumerate()
        .filter(|(_, &sk)| !(sk > c && sk > 0.0))
        .map(|(k, _)| v_t.row(k).transpose())
        .collect();
    if cols.is_empty() {
        Matrix::zeros(n, 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Orthonormal basis of `ran m`, one vector per column.
pub fn range_basis(m: &Matrix, tol: &Tolerance) -> Matrix {
    if m.is_empty() {
        return Matrix::zeros(m.nrows(), 0);
    }
    let Svd { u, s, .. } = svd(m);
    let c = cutoff(&s, tol);
    let cols: Vec<Vector> = s
        .iter()
        .enumerate()
        .filter(|(_, &sk)| sk > c && sk > 0.0)
        .map(|(k, _)| u.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        Matrix::zeros(m.nrows(), 0)
    } else {
        Matrix::from_columns(&cols)
    }
}

/// Whether `ran a ⊆ ran b`, decided by comparing `rank([b a])` with `rank(b)`.
pub fn subset_range(a: &Matrix, b: &Matrix, tol: &Tolerance) -> Result<bool> {
    if a.nrows() != b.nrows() {
        return Err(Error::dims("subset_range rows", b.nrows(), a.nrows()));
    }
    let mut joined = Matrix::zeros(b.nrows(), b.ncols() + a.ncols());
    joined.columns_mut(0, b.ncols()).copy_from(b);
    joined.columns_mut(b.ncols(), a.ncols()).copy_from(a);
    Ok(rank(&joined, tol) == rank(b, tol))
}

/// Whether `ker a ⊇ ker b`, decided by `‖a Z‖ ≤ residual_tol` for an
/// orthonormal basis `Z` of `ker b`.
pub fn subset_kernel(a: &Matrix, b: &Matrix, tol: &Tolerance) -> Result<bool> {
    if a.ncols() != b.ncols() {
        return Err(Error::dims("subset_kernel columns", b.ncols(), a.ncols()));
    }
    let z = kernel_basis(b, tol);
    if z.ncols() == 0 {
        return Ok(true);
    }
    Ok((a * z).norm() <= tol.residual_tol)
}

/// The minimum-norm `S` with `a = b S`. Requires `ran a ⊆ ran b`.
pub fn right_factor(a: &Matrix, b: &Matrix, tol: &Tolerance) -> Result<Matrix> {
    if a.nrows() != b.nrows() {
        return Err(Error::dims("right_factor rows", b.nrows(), a.nrows()));
    }
    let s = pinv(b, tol) * a;
    let residual = (a - b * &s).norm();
    if residual > tol.residual_tol {
        return Err(Error::RangeContainment { residual });
    }
    Ok(s)
}

/// The minimum-norm `S` with `a = S b`. Requires `ker b ⊆ ker a`.
pub fn left_factor(a: &Matrix, b: &Matrix, tol: &Tolerance) -> Result<Matrix> {
    if a.ncols() != b.ncols() {
        return Err(Error::dims("left_factor columns", b.ncols(), a.ncols()));
    }
    let s = a * pinv(b, tol);
    let residual = (a - &s * b).norm();
    if residual > tol.residual_tol {
        return Err(Error::KernelContainment { residual });
    }
    Ok(s)
}

/// Symmetric part `(m + mᵀ) / 2`.
pub fn sym(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues (ascending) and matching eigenvectors of the symmetric part of `m`.
pub fn sym_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), Matrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(sym(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Smallest eigenvalue of the symmetric part of `m` (`+inf` when empty).
pub fn min_eig(m: &Matrix) -> f64 {
    sym_eigen(m).0.first().copied().unwrap_or(f64::INFINITY)
}

/// Minimum eigenvalue together with a unit eigenvector.
pub fn min_eig_pair(m: &Matrix) -> (f64, Vector) {
    let (values, vectors) = sym_eigen(m);
    (values[0], vectors.column(0).into_owned())
}

/// Whether every entry strictly above the diagonal is at most `tol` in magnitude.
pub fn is_lower_triangular(m: &Matrix, tol: f64) -> bool {
    (0..m.nrows()).all(|i| (i + 1..m.ncols()).all(|j| m[(i, j)].abs() <= tol))
}

/// Indices of a maximal set of linearly independent columns, chosen greedily
/// by largest remaining norm (column-pivoted Gram-Schmidt), returned sorted.
pub fn independent_columns(m: &Matrix, tol: &Tolerance) -> Vec<usize> {
    let target = rank(m, tol);
    let mut residual = m.clone();
    let mut chosen = Vec::with_capacity(target);
    while chosen.len() < target {
        let (best, _) = (0..m.ncols())
            .filter(|j| !chosen.contains(j))
            .map(|j| (j, residual.column(j).norm()))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let q = residual.column(best).normalize();
        for j in 0..m.ncols() {
            // Two passes keep the residual columns orthogonal to q.
            for _ in 0..2 {
                let c = q.dot(&residual.column(j));
                let mut col = residual.column_mut(j);
                col.axpy(-c, &q, 1.0);
            }
        }
        chosen.push(best);
    }
    chosen.sort_unstable();
    chosen
}

/// Weighted inner product `Σ h_ij ⟨x_i, y_j⟩` for block vectors stored as columns.
pub fn block_inner(h: &Matrix, x: &Matrix, y: &Matrix) -> f64 {
    (x.transpose() * y).component_mul(h).sum()
}
