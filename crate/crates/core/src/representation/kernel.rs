use std::collections::BTreeSet;
use std::fmt;

use super::{Representation, RepresentationParts};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerance};

/// `Γ_p = R_p - R_pᵀ` where `R_p` has ones on row `p`.
pub fn gamma_matrix(p: usize, n: usize) -> Matrix {
    let mut g = Matrix::zeros(n, n);
    for j in 0..n {
        if j != p {
            g[(p, j)] = 1.0;
            g[(j, p)] = -1.0;
        }
    }
    g
}

/// A single failed p-kernel condition.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelViolation {
    /// `(M + Γ_p)_{ij} ≠ 0` above the diagonal.
    UpperEntry { row: usize, col: usize, value: f64 },
    NegativeDiagonal { index: usize, value: f64 },
    /// `M_ii ≠ 0` although `i ∈ F`.
    ForwardDiagonalNonzero { index: usize, value: f64 },
    /// `M_ii = 0` although `i ∉ F`.
    DiagonalVanishes { index: usize, value: f64 },
}

impl fmt::Display for KernelViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelViolation::UpperEntry { row, col, value } => {
                write!(f, "(M + Gamma_p)[{},{}] = {value:e} above the diagonal", row + 1, col + 1)
            }
            KernelViolation::NegativeDiagonal { index, value } => write!(f, "M[{0},{0}] = {value:e} is negative", index + 1),
            KernelViolation::ForwardDiagonalNonzero { index, value } => {
                write!(f, "M[{0},{0}] = {value:e} must vanish for forward index {0}", index + 1)
            }
            KernelViolation::DiagonalVanishes { index, value } => {
                write!(f, "M[{0},{0}] = {value:e} must be positive for non-forward index {0}", index + 1)
            }
        }
    }
}

/// Result of [`is_p_kernel`].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCheck {
    pub violations: Vec<KernelViolation>,
}

impl KernelCheck {
    pub fn is_kernel(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_index_sets(n: usize, p: usize, forward: &BTreeSet<usize>) -> Result<()> {
    if p >= n {
        return Err(Error::IndexOutOfRange { index: p, n });
    }
    if let Some(&i) = forward.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if forward.contains(&p) {
        return Err(Error::PrimalInForwardSet(p));
    }
    Ok(())
}

/// Checks that `M + Γ_p` is lower triangular, `M_ii ≥ 0`, and `M_ii = 0`
/// exactly for `i ∈ F`. Entries within `residual_tol` of zero count as zero.
pub fn is_p_kernel(m: &Matrix, p: usize, forward: &BTreeSet<usize>, tol: &Tolerance) -> Result<KernelCheck> {
    if !m.is_square() {
        return Err(Error::dims("p-kernel", "square matrix", format!("{}x{}", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    check_index_sets(n, p, forward)?;
    let eps = tol.residual_tol;
    let l = m + gamma_matrix(p, n);
    let mut violations = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if l[(i, j)].abs() > eps {
                violations.push(KernelViolation::UpperEntry { row: i, col: j, value: l[(i, j)] });
            }
        }
    }
    for i in 0..n {
        let d = m[(i, i)];
        if d < -eps {
            violations.push(KernelViolation::NegativeDiagonal { index: i, value: d });
        } else if forward.contains(&i) && d.abs() > eps {
            violations.push(KernelViolation::ForwardDiagonalNonzero { index: i, value: d });
        } else if !forward.contains(&i) && d <= eps {
            violations.push(KernelViolation::DiagonalVanishes { index: i, value: d });
        }
    }
    Ok(KernelCheck { violations })
}

fn require_kernel(m: &Matrix, p: usize, forward: &BTreeSet<usize>, tol: &Tolerance) -> Result<()> {
    let check = is_p_kernel(m, p, forward, tol)?;
    if let Some(v) = check.violations.first() {
        return Err(Error::InvalidKernel(v.to_string()));
    }
    Ok(())
}

/// Builds `(p, M, M K, H M K, H M)` from a p-kernel with `d = rank M`.
///
/// `K` spans `d` pivoted independent rows of `M` and `H` spans `d` pivoted
/// independent columns; both are orthonormalized so that `U = H M K` is no
/// worse conditioned than `M`.
pub fn from_kernel(m: &Matrix, p: usize, forward: &BTreeSet<usize>, tol: &Tolerance) -> Result<Representation> {
    require_kernel(m, p, forward, tol)?;
    let mt = m.transpose();
    let rows = linalg::independent_columns(&mt, tol);
    let cols = linalg::independent_columns(m, tol);
    let k = orthonormal(mt.select_columns(&rows));
    let h = orthonormal(m.select_columns(&cols)).transpose();
    from_kernel_with(m, p, forward, &k, &h, tol)
}

fn orthonormal(a: Matrix) -> Matrix {
    if a.ncols() == 0 {
        return a;
    }
    a.qr().q()
}

/// Builds `(p, M, M K, H M K, H M)` for given `K` (`n × d`) and `H` (`d × n`)
/// with `ran K = (ker M)^⊥` and `ker H = (ran M)^⊥`.
pub fn from_kernel_with(
    m: &Matrix,
    p: usize,
    forward: &BTreeSet<usize>,
    k: &Matrix,
    h: &Matrix,
    tol: &Tolerance,
) -> Result<Representation> {
    require_kernel(m, p, forward, tol)?;
    let n = m.nrows();
    let d = linalg::rank(m, tol);
    if k.shape() != (n, d) || h.shape() != (d, n) {
        return Err(Error::dims(
            "kernel factors",
            format!("K {n}x{d}, H {d}x{n}"),
            format!("K {:?}, H {:?}", k.shape(), h.shape()),
        ));
    }
    let mt = m.transpose();
    if linalg::rank(k, tol) != d || !linalg::subset_range(k, &mt, tol)? {
        return Err(Error::InvalidKernel("ran K must equal (ker M)^perp".into()));
    }
    let ht = h.transpose();
    if linalg::rank(h, tol) != d || !linalg::subset_range(&ht, m, tol)? {
        return Err(Error::InvalidKernel("ker H must equal (ran M)^perp".into()));
    }
    let mk = m * k;
    let parts = RepresentationParts {
        p,
        forward: forward.clone(),
        m: m.clone(),
        n: mk.clone(),
        u: h * mk,
        v: h * m,
    };
    Representation::new(parts, tol)
}

/// Smallest lifting number of any frugal splitting of `n` operators with
/// forward set `F` (0-based indices).
///
/// It equals `n - 1 - |F|`, plus one for each of the first and last index that
/// belongs to `F`, and is never below one.
pub fn minimal_lifting(n: usize, forward: &BTreeSet<usize>) -> Result<usize> {
    if n == 0 {
        return Err(Error::dims("minimal_lifting", "n >= 1", 0));
    }
    if let Some(&i) = forward.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if forward.len() >= n {
        return Err(Error::ForwardSetTooLarge);
    }
    let ends = usize::from(forward.contains(&0)) + usize::from(n > 1 && forward.contains(&(n - 1)));
    Ok((n - 1 - forward.len() + ends).max(1))
}

/// A p-kernel of rank [`minimal_lifting`]. Nonzero diagonal entries are one.
///
/// Indices before `p` that are not forward form an identity block with ones in
/// column `p`, indices after `p` form an identity block with `-1` in row `p`.
/// A single coupling entry per non-forward index makes the core singular, and
/// forward rows before `p` (columns after `p`) copy row 0 (column `n-1`) when
/// that index is not forward.
pub fn minimal_kernel(n: usize, forward: &BTreeSet<usize>, p: usize) -> Result<Matrix> {
    let target = minimal_lifting(n, forward)?;
    check_index_sets(n, p, forward)?;
    let mut m = Matrix::zeros(n, n);
    for i in 0..p {
        m[(i, p)] = 1.0;
    }
    for j in p + 1..n {
        m[(p, j)] = -1.0;
    }
    for i in (0..n).filter(|i| !forward.contains(i)) {
        m[(i, i)] = 1.0;
    }
    let before: Vec<usize> = (0..p).filter(|i| !forward.contains(i)).collect();
    let after: Vec<usize> = (p + 1..n).filter(|i| !forward.contains(i)).collect();
    if !after.is_empty() {
        let g = -1.0 / after.len() as f64;
        for &i in &after {
            m[(i, p)] = g;
        }
    } else if !before.is_empty() {
        let r = 1.0 / before.len() as f64;
        for &j in &before {
            m[(p, j)] = r;
        }
    }
    if p > 0 && !forward.contains(&0) {
        for &i in forward.iter().filter(|&&i| i < p) {
            m[(i, 0)] = m[(0, 0)];
        }
    }
    if p + 1 < n && !forward.contains(&(n - 1)) {
        for &j in forward.iter().filter(|&&j| j > p) {
            m[(n - 1, j)] = m[(n - 1, n - 1)];
        }
    }
    let rank = linalg::rank(&m, &Tolerance::default());
    if rank != target {
        return Err(Error::Consistency { what: "minimal kernel rank", residual: rank as f64 - target as f64 });
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn gamma_three() {
        let g = gamma_matrix(2, 3);
        let expect = Matrix::from_row_slice(3, 3, &[0., 0., -1., 0., 0., -1., 1., 1., 0.]);
        assert_eq!(g, expect);
    }

    #[test]
    fn davis_yin_kernel_passes() {
        let m = Matrix::from_row_slice(3, 3, &[1., 0., 1., 1., 0., 1., 1., 0., 1.]);
        let tol = Tolerance::default();
        assert!(is_p_kernel(&m, 2, &set(&[1]), &tol).unwrap().is_kernel());
        let check = is_p_kernel(&m, 2, &BTreeSet::new(), &tol).unwrap();
        assert_eq!(check.violations, vec![KernelViolation::DiagonalVanishes { index: 1, value: 0.0 }]);
    }

    #[test]
    fn upper_entry_violation_reported() {
        let mut m = Matrix::from_row_slice(2, 2, &[1., 1., 1., 1.]);
        m[(0, 1)] = 2.0;
        let check = is_p_kernel(&m, 1, &BTreeSet::new(), &Tolerance::default()).unwrap();
        assert!(matches!(check.violations[0], KernelViolation::UpperEntry { row: 0, col: 1, .. }));
    }

    #[test]
    fn primal_in_forward_set_is_error() {
        let m = Matrix::identity(2, 2);
        assert!(matches!(
            is_p_kernel(&m, 1, &set(&[1]), &Tolerance::default()),
            Err(Error::PrimalInForwardSet(1))
        ));
    }

    #[test]
    fn lifting_examples() {
        assert_eq!(minimal_lifting(5, &set(&[])).unwrap(), 4);
        assert_eq!(minimal_lifting(5, &set(&[1, 2])).unwrap(), 2);
        assert_eq!(minimal_lifting(5, &set(&[0])).unwrap(), 4);
        assert_eq!(minimal_lifting(3, &set(&[1])).unwrap(), 1);
        assert_eq!(minimal_lifting(2, &set(&[0])).unwrap(), 1);
        assert!(matches!(minimal_lifting(2, &set(&[0, 1])), Err(Error::ForwardSetTooLarge)));
    }

    #[test]
    fn both_ends_forward_cost_one_extra() {
        assert_eq!(minimal_lifting(3, &set(&[0, 2])).unwrap(), 2);
        assert_eq!(minimal_lifting(4, &set(&[0, 3])).unwrap(), 3);
    }

    #[test]
    fn minimal_kernel_two_operators() {
        let m = minimal_kernel(2, &BTreeSet::new(), 1).unwrap();
        assert_eq!(linalg::rank(&m, &Tolerance::default()), 1);
        assert!(is_p_kernel(&m, 1, &BTreeSet::new(), &Tolerance::default()).unwrap().is_kernel());
    }

    #[test]
    fn from_kernel_douglas_rachford() {
        let m = Matrix::from_row_slice(2, 2, &[1., 1., 1., 1.]);
        let rep = from_kernel(&m, 1, &BTreeSet::new(), &Tolerance::default()).unwrap();
        assert_eq!(rep.lifting(), 1);
    }

    #[test]
    fn from_kernel_rejects_non_kernel() {
        let m = Matrix::from_row_slice(2, 2, &[1., 0., 1., 1.]);
        assert!(matches!(
            from_kernel(&m, 1, &BTreeSet::new(), &Tolerance::default()),
            Err(Error::InvalidKernel(_))
        ));
    }
}
