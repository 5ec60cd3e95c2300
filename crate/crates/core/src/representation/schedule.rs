use std::collections::BTreeSet;

use super::kernel::gamma_matrix;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerance};

/// Direct dependencies of each index: `j` with `j < i` and `|L_ij| > residual_tol`.
pub(crate) fn dependencies(l: &Matrix, tol: &Tolerance) -> Vec<Vec<usize>> {
    (0..l.nrows())
        .map(|i| (0..i).filter(|&j| l[(i, j)].abs() > tol.residual_tol).collect())
        .collect()
}

/// Groups indices into stages: index `i` depends on `j` if `L_ij ≠ 0`
/// (`L = M + Γ_p`), and every index sits one stage after its latest
/// dependency. Indices within a stage can be evaluated in any order.
pub fn dependency_stages(m: &Matrix, p: usize, tol: &Tolerance) -> Result<Vec<Vec<usize>>> {
    let n = m.nrows();
    if !m.is_square() || p >= n {
        return Err(Error::dims("dependency_stages", "square M with p < n", format!("{:?}, p={p}", m.shape())));
    }
    let l = m + gamma_matrix(p, n);
    if !linalg::is_lower_triangular(&l, tol.residual_tol) {
        return Err(Error::InvalidKernel("M + Gamma_p is not lower triangular".into()));
    }
    let deps = dependencies(&l, tol);
    let mut level = vec![0usize; n];
    for i in 0..n {
        level[i] = deps[i].iter().map(|&j| level[j] + 1).max().unwrap_or(0);
    }
    let depth = level.iter().copied().max().map_or(0, |d| d + 1);
    let mut stages = vec![Vec::new(); depth];
    for (i, &lv) in level.iter().enumerate() {
        stages[lv].push(i);
    }
    Ok(stages)
}

/// Resolvent step size of each operator: `L_ii` for ordinary indices,
/// `1 / L_pp` for the primal index, `None` for forward indices.
pub fn step_sizes(m: &Matrix, p: usize, forward: &BTreeSet<usize>) -> Result<Vec<Option<f64>>> {
    let n = m.nrows();
    if !m.is_square() || p >= n {
        return Err(Error::dims("step_sizes", "square M with p < n", format!("{:?}, p={p}", m.shape())));
    }
    Ok((0..n)
        .map(|i| {
            if forward.contains(&i) {
                None
            } else if i == p {
                Some(1.0 / m[(p, p)])
            } else {
                Some(m[(i, i)])
            }
        })
        .collect())
}
