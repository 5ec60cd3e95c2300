use std::collections::BTreeSet;

use super::{beta, check_tuple, finite, mat, positive, Betas, Splitting};
use crate::blocks::LiftedVector;
use crate::convergence;
use crate::error::Result;
use crate::linalg::{self, Matrix, Tolerance};
use crate::operators::OperatorTuple;
use crate::representation::{compose, factorize, Representation, RepresentationParts};

fn rep(p: usize, forward: &[usize], m: Matrix, n: Matrix, u: Matrix, v: Matrix, tol: &Tolerance) -> Result<Representation> {
    Representation::new(RepresentationParts { p, forward: forward.iter().copied().collect(), m, n, u, v }, tol)
}

fn scalar_q(x: f64) -> Matrix {
    mat(1, 1, &[x])
}

/// `z ↦ J_{γA_2}(z - γ A_1 z)`.
#[derive(Debug, Clone)]
pub struct ForwardBackward {
    gamma: f64,
}

impl ForwardBackward {
    pub fn new(gamma: f64) -> Result<Self> {
        Ok(ForwardBackward { gamma: positive("gamma", gamma)? })
    }
}

impl Splitting for ForwardBackward {
    fn name(&self) -> &'static str {
        "forward-backward"
    }

    fn reference(&self) -> &'static str {
        "Lions & Mercier (1979); Passty (1979)"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("gamma", self.gamma)]
    }

    fn num_operators(&self) -> usize {
        2
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::from([0])
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let g = self.gamma;
        rep(1, &[0], mat(2, 2, &[0.0, 1.0, 0.0, 1.0 / g]), mat(2, 1, &[1.0, 1.0 / g]), mat(1, 1, &[1.0]), mat(1, 2, &[0.0, 1.0]), tol)
    }

    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        Ok(Some(scalar_q(1.0 / self.gamma)))
    }

    fn convergence_condition(&self, betas: &Betas) -> Result<bool> {
        Ok(self.gamma < 2.0 * beta(betas, 0)?)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        check_tuple(tuple, z, 2, 1)?;
        let g = self.gamma;
        let z0 = z.block(0);
        let w = &z0 - tuple.operator(0).forward(&z0)? * g;
        LiftedVector::from_blocks(&[tuple.operator(1).resolve(g, &w)])
    }
}

/// `z ↦ z + J_{γA_2}(2 J_{γA_1} z - z) - J_{γA_1} z`.
#[derive(Debug, Clone)]
pub struct DouglasRachford {
    gamma: f64,
}

impl DouglasRachford {
    pub fn new(gamma: f64) -> Result<Self> {
        Ok(DouglasRachford { gamma: positive("gamma", gamma)? })
    }
}

impl Splitting for DouglasRachford {
    fn name(&self) -> &'static str {
        "douglas-rachford"
    }

    fn reference(&self) -> &'static str {
        "Douglas & Rachford (1956); Lions & Mercier (1979)"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("gamma", self.gamma)]
    }

    fn num_operators(&self) -> usize {
        2
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::new()
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let g = self.gamma;
        rep(1, &[], mat(2, 2, &[g, 1.0, 1.0, 1.0 / g]), mat(2, 1, &[1.0, 1.0 / g]), mat(1, 1, &[1.0]), mat(1, 2, &[g, 1.0]), tol)
    }

    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        Ok(Some(scalar_q(1.0 / self.gamma)))
    }

    fn convergence_condition(&self, _betas: &Betas) -> Result<bool> {
        Ok(true)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        check_tuple(tuple, z, 2, 1)?;
        let g = self.gamma;
        let z0 = z.block(0);
        let x1 = tuple.operator(0).resolve(g, &z0);
        let x2 = tuple.operator(1).resolve(g, &(&x1 * 2.0 - &z0));
        LiftedVector::from_blocks(&[z0 + x2 - x1])
    }
}

/// `z ↦ z - J_{γA_1} z + J_{γA_3}(2 J_{γA_1} z - z - γ A_2 J_{γA_1} z)`.
#[derive(Debug, Clone)]
pub struct DavisYin {
    gamma: f64,
}

impl DavisYin {
    pub fn new(gamma: f64) -> Result<Self> {
        Ok(DavisYin { gamma: positive("gamma", gamma)? })
    }
}

impl Splitting for DavisYin {
    fn name(&self) -> &'static str {
        "davis-yin"
    }

    fn reference(&self) -> &'static str {
        "Davis & Yin (2017)"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("gamma", self.gamma)]
    }

    fn num_operators(&self) -> usize {
        3
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::from([1])
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let g = self.gamma;
        rep(
            2,
            &[1],
            mat(3, 3, &[g, 0.0, 1.0, g, 0.0, 1.0, 1.0, 0.0, 1.0 / g]),
            mat(3, 1, &[1.0, 1.0, 1.0 / g]),
            mat(1, 1, &[1.0]),
            mat(1, 3, &[g, 0.0, 1.0]),
            tol,
        )
    }

    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        Ok(Some(scalar_q(1.0 / self.gamma)))
    }

    fn convergence_condition(&self, betas: &Betas) -> Result<bool> {
        Ok(self.gamma < 2.0 * beta(betas, 1)?)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        check_tuple(tuple, z, 3, 1)?;
        let g = self.gamma;
        let z0 = z.block(0);
        let x1 = tuple.operator(0).resolve(g, &z0);
        let w = &x1 * 2.0 - &z0 - tuple.operator(1).forward(&x1)? * g;
        let x3 = tuple.operator(2).resolve(g, &w);
        LiftedVector::from_blocks(&[z0 - x1 + x3])
    }
}

/// Primal-dual method with steps `τ` and `σ`; the second operator enters
/// through the resolvent of its inverse.
#[derive(Debug, Clone)]
pub struct ChambollePock {
    tau: f64,
    sigma: f64,
}

impl ChambollePock {
    pub fn new(tau: f64, sigma: f64) -> Result<Self> {
        Ok(ChambollePock { tau: positive("tau", tau)?, sigma: positive("sigma", sigma)? })
    }

    fn kernel(&self) -> Matrix {
        mat(2, 2, &[1.0 / self.tau, -1.0, -1.0, 1.0 / self.sigma])
    }
}

impl Splitting for ChambollePock {
    fn name(&self) -> &'static str {
        "chambolle-pock"
    }

    fn reference(&self) -> &'static str {
        "Chambolle & Pock (2011)"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("tau", self.tau), ("sigma", self.sigma)]
    }

    fn num_operators(&self) -> usize {
        2
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::new()
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let m = self.kernel();
        rep(0, &[], m.clone(), m, Matrix::identity(2, 2), Matrix::identity(2, 2), tol)
    }

    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        Ok(Some(self.kernel()))
    }

    fn convergence_condition(&self, _betas: &Betas) -> Result<bool> {
        Ok(self.sigma * self.tau < 1.0)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        check_tuple(tuple, z, 2, 2)?;
        let (t, s) = (self.tau, self.sigma);
        let (z1, z2) = (z.block(0), z.block(1));
        let x1 = tuple.operator(0).resolve(t, &(&z1 - &z2 * t));
        // Moreau: J_{σB^{-1}}(w) = w - σ J_{B/σ}(w / σ).
        let w = &z2 + (&x1 * 2.0 - &z1) * s;
        let x2 = &w - tuple.operator(1).resolve(1.0 / s, &(&w / s)) * s;
        LiftedVector::from_blocks(&[x1, x2])
    }
}

/// Forward-backward with momentum `θ` applied to the forward step.
#[derive(Debug, Clone)]
pub struct MomentumForwardBackward {
    gamma: f64,
    theta: f64,
}

impl MomentumForwardBackward {
    pub fn new(gamma: f64, theta: f64) -> Result<Self> {
        Ok(MomentumForwardBackward { gamma: positive("gamma", gamma)?, theta: finite("theta", theta)? })
    }

    fn q_of(&self, eps: f64) -> Matrix {
        let (g, t) = (self.gamma, self.theta);
        mat(2, 2, &[1.0 - t, t, t, t.abs() + eps]) / g
    }

    /// The free parameter `ε` maximizing `min(λmin(Q), λmin(W))`: a log grid
    /// followed by golden-section refinement (the objective is concave in `ε`).
    pub fn best_epsilon(&self, betas: &Betas) -> Result<f64> {
        let tol = Tolerance::default();
        let fact = factorize(&self.representation(&tol)?, &tol)?;
        beta(betas, 0)?;
        let score = |eps: f64| -> f64 {
            let q = self.q_of(eps);
            let w = convergence::build_w(&fact, &q, betas).expect("dimensions match");
            linalg::min_eig(&q).min(linalg::min_eig(&w))
        };
        let grid: Vec<f64> = (0..=240).map(|k| 10f64.powf(-10.0 + k as f64 * 0.05)).collect();
        let (best, _) = grid
            .iter()
            .enumerate()
            .map(|(k, &e)| (k, score(e)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let mut lo = grid[best.saturating_sub(1)];
        let mut hi = grid[(best + 1).min(grid.len() - 1)];
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..100 {
            let a = hi - phi * (hi - lo);
            let b = lo + phi * (hi - lo);
            if score(a) >= score(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl Splitting for MomentumForwardBackward {
    fn name(&self) -> &'static str {
        "fb-momentum"
    }

    fn reference(&self) -> &'static str {
        "inertial forward-backward, Polyak-type momentum"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("gamma", self.gamma), ("theta", self.theta)]
    }

    fn num_operators(&self) -> usize {
        2
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::from([0])
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let (g, t) = (self.gamma, self.theta);
        let s = mat(2, 2, &[1.0, 0.0, (1.0 - t) / g, t / g]);
        let u = mat(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let p = mat(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        compose(1, &BTreeSet::from([0]), &s, &u, &p, tol)
    }

    fn closed_form_q(&self, betas: &Betas) -> Result<Option<Matrix>> {
        Ok(Some(self.q_of(self.best_epsilon(betas)?)))
    }

    fn convergence_condition(&self, betas: &Betas) -> Result<bool> {
        let t = self.theta;
        Ok(1.0 - t - 2.0 * t.abs() - self.gamma / (2.0 * beta(betas, 0)?) > 0.0)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        check_tuple(tuple, z, 2, 2)?;
        let (g, t) = (self.gamma, self.theta);
        let (z1, z2) = (z.block(0), z.block(1));
        let w = &z1 - tuple.operator(0).forward(&z1)? * g + &z2 * t;
        let x = tuple.operator(1).resolve(g, &w);
        let diff = &x - &z1;
        LiftedVector::from_blocks(&[x, diff])
    }
}

/// Forward-backward with Nesterov-type momentum `θ`: the forward step is
/// taken at the extrapolated point.
#[derive(Debug, Clone)]
pub struct NesterovForwardBackward {
    gamma: f64,
    theta: f64,
}

impl NesterovForwardBackward {
    pub fn new(gamma: f64, theta: f64) -> Result<Self> {
        Ok(NesterovForwardBackward { gamma: positive("gamma", gamma)?, theta: finite("theta", theta)? })
    }

    /// The `(2,2)` entry of `γ Q`. It is optimal for the condition; at `θ = 0`
    /// it degenerates and the midpoint `(1 - ĝ)/2` is used instead.
    fn corner(&self, g_hat: f64) -> f64 {
        let t = self.theta;
        if t == 0.0 {
            0.5 * (1.0 - g_hat)
        } else {
            t * t * g_hat + t.abs() * (1.0 - g_hat).abs()
        }
    }
}

impl Splitting for NesterovForwardBackward {
    fn name(&self) -> &'static str {
        "fb-nesterov"
    }

    fn reference(&self) -> &'static str {
        "Nesterov (1983); Beck & Teboulle (2009)"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("gamma", self.gamma), ("theta", self.theta)]
    }

    fn num_operators(&self) -> usize {
        2
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::from([0])
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let (g, t) = (self.gamma, self.theta);
        let s = mat(2, 2, &[1.0 - t, t, (1.0 - t) / g, t / g]);
        let u = mat(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let p = mat(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        compose(1, &BTreeSet::from([0]), &s, &u, &p, tol)
    }

    fn closed_form_q(&self, betas: &Betas) -> Result<Option<Matrix>> {
        let (g, t) = (self.gamma, self.theta);
        let a = self.corner(g / (2.0 * beta(betas, 0)?));
        Ok(Some(mat(2, 2, &[1.0 - t, t, t, a]) / g))
    }

    fn convergence_condition(&self, betas: &Betas) -> Result<bool> {
        let t = self.theta;
        let g_hat = self.gamma / (2.0 * beta(betas, 0)?);
        Ok(1.0 - t - g_hat * (1.0 + t * t) - 2.0 * t.abs() * (1.0 - g_hat).abs() > 0.0)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        check_tuple(tuple, z, 2, 2)?;
        let (g, t) = (self.gamma, self.theta);
        let (z1, z2) = (z.block(0), z.block(1));
        let w = &z1 + &z2 * t;
        let x = tuple.operator(1).resolve(g, &(&w - tuple.operator(0).forward(&w)? * g));
        let diff = &x - &z1;
        LiftedVector::from_blocks(&[x, diff])
    }
}
