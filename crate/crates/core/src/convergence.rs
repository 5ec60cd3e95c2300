//! Lyapunov certificates for representations with forward operators.
//!
//! A symmetric `Q ≻ 0` certifies convergence when the structural condition
//! `(I - I_F)(PᵀQ - S)U = 0` holds and
//! `W = QU + (QU)ᵀ - UᵀQU - ½(PᵀQU - SU)ᵀ B† (PᵀQU - SU) ≻ 0`,
//! where `B† = diag(1/β_i)` on the forward set and zero elsewhere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blocks::{DualVector, LiftedVector};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerance, Vector};
use crate::representation::FactoredRepresentation;
use crate::zoo::Betas;

/// Outcome of [`check`].
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub q: Matrix,
    pub w: Matrix,
    pub structural_residual: f64,
    pub min_eig_q: f64,
    pub min_eig_w: f64,
    pub satisfied: bool,
    /// Seed of the search that produced `q`, if any.
    pub seed: Option<u64>,
}

fn check_q(fact: &FactoredRepresentation, q: &Matrix) -> Result<()> {
    let d = fact.lifting();
    if q.shape() != (d, d) {
        return Err(Error::dims("Q", format!("{d}x{d}"), format!("{}x{}", q.nrows(), q.ncols())));
    }
    linalg::ensure_finite(q, "Q")
}

/// `B† = diag(1/β_i)` for forward indices, zero elsewhere.
pub fn b_dagger(fact: &FactoredRepresentation, betas: &Betas) -> Result<Matrix> {
    let n = fact.num_operators();
    let mut b = Matrix::zeros(n, n);
    for &i in &fact.forward {
        b[(i, i)] = 1.0 / crate::zoo::beta(betas, i)?;
    }
    Ok(b)
}

fn forward_mask(fact: &FactoredRepresentation) -> Matrix {
    let n = fact.num_operators();
    Matrix::from_fn(n, n, |i, j| if i == j && !fact.forward.contains(&i) { 1.0 } else { 0.0 })
}

/// `W` for the given `Q`.
pub fn build_w(fact: &FactoredRepresentation, q: &Matrix, betas: &Betas) -> Result<Matrix> {
    check_q(fact, q)?;
    let qu = q * &fact.u;
    let g = fact.pp.transpose() * &qu - &fact.s * &fact.u;
    let bd = b_dagger(fact, betas)?;
    Ok(&qu + qu.transpose() - fact.u.transpose() * &qu - g.transpose() * bd * &g * 0.5)
}

/// `‖(I - I_F)(PᵀQ - S)U‖_F`.
pub fn structural_residual(fact: &FactoredRepresentation, q: &Matrix) -> Result<f64> {
    check_q(fact, q)?;
    Ok((forward_mask(fact) * (fact.pp.transpose() * q - &fact.s) * &fact.u).norm())
}

/// The symmetric matrix
/// `[[QU + (QU)ᵀ - UᵀQU, Uᵀ(PᵀQ - S)ᵀ C], [C (PᵀQ - S) U, I]]` with
/// `C = (½B†)^{1/2}`; its Schur complement is `W`.
pub fn schur_form(fact: &FactoredRepresentation, q: &Matrix, betas: &Betas) -> Result<Matrix> {
    check_q(fact, q)?;
    let (d, n) = (fact.lifting(), fact.num_operators());
    let qu = q * &fact.u;
    let c = (b_dagger(fact, betas)? * 0.5).map(f64::sqrt);
    let off = c * (fact.pp.transpose() * q - &fact.s) * &fact.u;
    let mut out = Matrix::zeros(d + n, d + n);
    out.view_mut((0, 0), (d, d)).copy_from(&(&qu + qu.transpose() - fact.u.transpose() * &qu));
    out.view_mut((d, 0), (n, d)).copy_from(&off);
    out.view_mut((0, d), (d, n)).copy_from(&off.transpose());
    out.view_mut((d, d), (n, n)).fill_with_identity();
    Ok(out)
}

/// Evaluates a candidate `Q`.
pub fn check(fact: &FactoredRepresentation, q: &Matrix, betas: &Betas, tol: &Tolerance) -> Result<Certificate> {
    let structural = structural_residual(fact, q)?;
    let w = build_w(fact, q, betas)?;
    let min_eig_q = linalg::min_eig(q);
    let min_eig_w = linalg::min_eig(&w);
    let satisfied = structural <= tol.residual_tol && min_eig_q > tol.eig_tol && min_eig_w > tol.eig_tol;
    Ok(Certificate { q: linalg::sym(q), w: linalg::sym(&w), structural_residual: structural, min_eig_q, min_eig_w, satisfied, seed: None })
}

/// Options of [`search_q`].
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seed: 0, restarts: 8, iterations: 600 }
    }
}

fn sym_basis(d: usize) -> Vec<Matrix> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            let mut e = Matrix::zeros(d, d);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            out.push(e);
        }
    }
    out
}

/// Searches for a certificate.
///
/// The structural condition is affine in `Q`, so feasible `Q` form
/// `Q_0 + span{Z_k}`. On that set `min(λmin(Q), λmin(schur_form))` is concave
/// and is maximized by normalized supergradient ascent from several seeded
/// starting points. Returns `None` when no tried `Q` is a certificate.
pub fn search_q(fact: &FactoredRepresentation, betas: &Betas, tol: &Tolerance, opts: &SearchOptions) -> Result<Option<Certificate>> {
    let d = fact.lifting();
    let rank = linalg::rank(&fact.u, tol);
    if rank < d {
        return Err(Error::RankDeficientU { rank, d });
    }
    b_dagger(fact, betas)?;
    let mask = forward_mask(fact);
    let basis = sym_basis(d);
    let lin = |e: &Matrix| -> Matrix { &mask * fact.pp.transpose() * e * &fact.u };
    let target = &mask * &fact.s * &fact.u;
    let cols: Vec<Vector> = basis.iter().map(|e| Vector::from_column_slice(lin(e).as_slice())).collect();
    let a = Matrix::from_columns(&cols);
    let b = Vector::from_column_slice(target.as_slice());
    let q0_coef = linalg::pinv(&a, tol) * &b;
    if (&a * &q0_coef - &b).norm() > tol.residual_tol {
        return Ok(None);
    }
    let assemble = |coef: &Vector| -> Matrix { basis.iter().zip(coef.iter()).fold(Matrix::zeros(d, d), |acc, (e, c)| acc + e * *c) };
    let q0 = assemble(&q0_coef);
    let null = linalg::kernel_basis(&a, tol);
    let dirs: Vec<Matrix> = (0..null.ncols()).map(|k| assemble(&null.column(k).into_owned())).collect();
    let schur0 = schur_form(fact, &q0, betas)?;
    let zero = Matrix::zeros(d, d);
    let schur_const = schur_form(fact, &zero, betas)?;
    let dschur: Vec<Matrix> = dirs.iter().map(|e| schur_form(fact, e, betas).map(|s| s - &schur_const)).collect::<Result<_>>()?;

    let at = |c: &[f64]| -> (Matrix, Matrix) {
        let mut q = q0.clone();
        let mut s = schur0.clone();
        for (k, &ck) in c.iter().enumerate() {
            q += &dirs[k] * ck;
            s += &dschur[k] * ck;
        }
        (q, s)
    };
    let score = |c: &[f64]| -> (f64, Vec<f64>) {
        let (q, s) = at(c);
        let (lq, vq) = linalg::min_eig_pair(&q);
        let (ls, vs) = linalg::min_eig_pair(&s);
        let grad = if lq <= ls {
            dirs.iter().map(|e| vq.dot(&(e * &vq))).collect()
        } else {
            dschur.iter().map(|e| vs.dot(&(e * &vs))).collect()
        };
        (lq.min(ls), grad)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let scale = q0.norm().max(1.0);
    let mut best_c = vec![0.0; dirs.len()];
    let mut best = score(&best_c).0;
    if !dirs.is_empty() {
        for restart in 0..opts.restarts.max(1) {
            let mut c: Vec<f64> = if restart == 0 { vec![0.0; dirs.len()] } else { (0..dirs.len()).map(|_| rng.gen_range(-1.0..1.0) * scale).collect() };
            let step0 = 0.5 * scale;
            for it in 0..opts.iterations {
                let (val, grad) = score(&c);
                if val > best {
                    best = val;
                    best_c = c.clone();
                }
                let gn = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                if gn == 0.0 {
                    break;
                }
                let step = step0 / ((it + 1) as f64).sqrt();
                for (ck, gk) in c.iter_mut().zip(&grad) {
                    *ck += step * gk / gn;
                }
            }
        }
    }
    let (q, _) = at(&best_c);
    let mut cert = check(fact, &q, betas, tol)?;
    cert.seed = Some(opts.seed);
    Ok(cert.satisfied.then_some(cert))
}

/// One Fejér inequality
/// `‖z⁺ - P y*‖²_Q ≤ ‖z - P y*‖²_Q - ‖z - P y‖²_W`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FejerStep {
    pub lhs: f64,
    pub rhs: f64,
    /// `‖z - P y*‖²_Q`.
    pub lyapunov: f64,
    /// `‖z - P y‖²_W`.
    pub correction: f64,
    pub holds: bool,
}

/// Evaluates the Fejér inequality for one step with absolute slack.
#[allow(clippy::too_many_arguments)]
pub fn fejer_step(
    q: &Matrix,
    w: &Matrix,
    pp: &Matrix,
    y_star: &DualVector,
    z: &LiftedVector,
    z_next: &LiftedVector,
    y: &DualVector,
    slack: f64,
) -> Result<FejerStep> {
    let py_star = y_star.apply(pp)?;
    let py = y.apply(pp)?;
    let lhs = z_next.sub(&py_star).weighted_norm_sq(q);
    let lyapunov = z.sub(&py_star).weighted_norm_sq(q);
    let correction = z.sub(&py).weighted_norm_sq(w);
    let rhs = lyapunov - correction;
    Ok(FejerStep { lhs, rhs, lyapunov, correction, holds: lhs <= rhs + slack })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::representation::factorize;
    use crate::zoo::{Params, Registry};

    fn fact(name: &str, params: Params) -> FactoredRepresentation {
        let tol = Tolerance::default();
        let e = Registry::builtin().entry(name, &params, &tol).unwrap();
        factorize(e.representation(), &tol).unwrap()
    }

    #[test]
    fn davis_yin_w_closed_form() {
        let f = fact("davis-yin", Params::new().with("gamma", 1.5));
        let betas = BTreeMap::from([(1, 1.0)]);
        let q = Matrix::from_element(1, 1, 1.0 / 1.5);
        let w = build_w(&f, &q, &betas).unwrap();
        assert!((w[(0, 0)] - (1.0 / 1.5 - 0.5)).abs() < 1e-14);
        assert!(structural_residual(&f, &q).unwrap() < 1e-14);
    }

    #[test]
    fn schur_complement_is_w() {
        let f = fact("fb-momentum", Params::new().with("gamma", 0.5).with("theta", 0.1));
        let betas = BTreeMap::from([(0, 1.0)]);
        let q = Matrix::from_row_slice(2, 2, &[1.8, 0.2, 0.2, 0.5]);
        let s = schur_form(&f, &q, &betas).unwrap();
        let d = 2;
        let a = s.view((0, 0), (d, d)).into_owned();
        let b = s.view((d, 0), (s.nrows() - d, d)).into_owned();
        let w = build_w(&f, &q, &betas).unwrap();
        assert!((a - b.transpose() * b - linalg::sym(&w)).amax() < 1e-12);
    }

    #[test]
    fn missing_beta_is_an_error() {
        let f = fact("davis-yin", Params::new());
        let q = Matrix::identity(1, 1);
        assert!(matches!(build_w(&f, &q, &BTreeMap::new()), Err(Error::MissingBeta(1))));
    }

    #[test]
    fn search_finds_douglas_rachford_certificate() {
        let f = fact("douglas-rachford", Params::new().with("gamma", 3.0));
        let cert = search_q(&f, &BTreeMap::new(), &Tolerance::default(), &SearchOptions::default()).unwrap().unwrap();
        assert!((cert.q[(0, 0)] - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn search_refuses_davis_yin_outside_range() {
        let f = fact("davis-yin", Params::new().with("gamma", 3.0));
        let betas = BTreeMap::from([(1, 1.0)]);
        assert!(search_q(&f, &betas, &Tolerance::default(), &SearchOptions::default()).unwrap().is_none());
    }

    #[test]
    fn search_refuses_rank_deficient_u() {
        let f = FactoredRepresentation {
            p: 1,
            forward: Default::default(),
            s: Matrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]),
            u: Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            pp: Matrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]),
        };
        assert!(matches!(
            search_q(&f, &BTreeMap::new(), &Tolerance::default(), &SearchOptions::default()),
            Err(Error::RankDeficientU { rank: 1, d: 2 })
        ));
    }
}
