use std::collections::BTreeSet;

use super::{beta, check_tuple, positive, Betas, Splitting};
use crate::blocks::LiftedVector;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tolerance, Vector};
use crate::operators::OperatorTuple;
use crate::representation::{from_kernel_with, Representation, RepresentationParts};

/// Forward-backward type splitting of `n` operators with `f` forward
/// operators and minimal lifting `n - 1 - f`.
///
/// Operator `0` is backward, operators `1..=n-2-f` are backward with step
/// `λ/θ`, operators `n-1-f..=n-2` are forward, and operator `n-1` is primal.
#[derive(Debug, Clone)]
pub struct NewMinimal {
    n: usize,
    f: usize,
    lambda: f64,
    theta: f64,
}

impl NewMinimal {
    pub fn new(n: usize, f: usize, lambda: f64, theta: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::param("n", n as f64, "must be at least 3"));
        }
        if f > n - 2 {
            return Err(Error::param("f", f as f64, "must be at most n - 2"));
        }
        Ok(NewMinimal { n, f, lambda: positive("lambda", lambda)?, theta: positive("theta", theta)? })
    }

    fn backward(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n - 2 - self.f
    }

    fn forward(&self) -> std::ops::Range<usize> {
        self.n - 1 - self.f..self.n - 1
    }

    fn r(&self) -> usize {
        self.n - 2 - self.f
    }

    /// Kernel and factors for `λ = 1`.
    fn unit_kernel(&self) -> (Matrix, Matrix, Matrix) {
        let (n, f, t, r) = (self.n, self.f, self.theta, self.r());
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, 0)] = 1.0;
            m[(i, n - 1)] = 1.0;
        }
        for i in self.backward() {
            m[(i, i)] = 1.0 / t;
        }
        let mut k = Matrix::zeros(n, 1 + r);
        k[(0, 0)] = 0.5;
        k[(n - 1, 0)] = 0.5;
        let mut h = Matrix::zeros(1 + r, n);
        let w = t / (2 + f) as f64;
        h[(0, 0)] = w;
        h[(0, n - 1)] = w;
        for i in self.forward() {
            h[(0, i)] = w;
        }
        for (j, i) in self.backward().enumerate() {
            k[(i, j + 1)] = 1.0;
            h[(j + 1, i)] = t;
        }
        (m, k, h)
    }
}

impl Splitting for NewMinimal {
    fn name(&self) -> &'static str {
        "new-minimal"
    }

    fn reference(&self) -> &'static str {
        "minimal-lifting forward-backward splitting of n operators"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("n", self.n as f64), ("f", self.f as f64), ("lambda", self.lambda), ("theta", self.theta)]
    }

    fn num_operators(&self) -> usize {
        self.n
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        self.forward().collect()
    }

    /// Built from the unit-step kernel; the step `λ` is folded in as
    /// `M' = E M D`, `N' = E N`, `V' = V D` with `D = diag(λ, …, λ, 1)` and
    /// `E = diag(1, …, 1, 1/λ)`.
    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let (m, k, h) = self.unit_kernel();
        let unit = from_kernel_with(&m, self.n - 1, &self.forward_set(), &k, &h, tol)?;
        let n = self.n;
        let lam = self.lambda;
        let mut dd = Vector::from_element(n, lam);
        dd[n - 1] = 1.0;
        let mut ee = Vector::from_element(n, 1.0);
        ee[n - 1] = 1.0 / lam;
        let d = Matrix::from_diagonal(&dd);
        let e = Matrix::from_diagonal(&ee);
        let parts = RepresentationParts {
            p: n - 1,
            forward: self.forward_set(),
            m: &e * unit.m() * &d,
            n: &e * unit.n(),
            u: unit.u().clone(),
            v: unit.v() * &d,
        };
        Representation::new(parts, tol)
    }

    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        let d = 1 + self.r();
        Ok(Some(Matrix::identity(d, d) / (self.theta * self.lambda)))
    }

    fn convergence_condition(&self, betas: &Betas) -> Result<bool> {
        let mut inv = 0.0;
        for i in self.forward() {
            inv += 1.0 / beta(betas, i)?;
        }
        let slack = 2.0 - self.theta * (self.n - 1 - self.f) as f64;
        Ok(self.lambda / 2.0 * inv < slack)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        let (n, lam, t) = (self.n, self.lambda, self.theta);
        check_tuple(tuple, z, n, 1 + self.r())?;
        let z1 = z.block(0);
        let x1 = tuple.operator(0).resolve(lam, &z1);
        let mut bar = Vector::zeros(tuple.m());
        let mut xr = Vec::with_capacity(self.r());
        for (j, i) in self.backward().enumerate() {
            let zi = z.block(j + 1);
            let xi = tuple.operator(i).resolve(lam / t, &(&x1 + &zi / t));
            bar += &zi + (&x1 - &xi) * t;
            xr.push(xi);
        }
        for i in self.forward() {
            bar += tuple.operator(i).forward(&x1)? * lam;
        }
        let xn = tuple.operator(n - 1).resolve(lam, &(&x1 * 2.0 - &z1 - bar));
        let mut next = vec![&z1 - (&x1 - &xn) * t];
        for (j, xi) in xr.iter().enumerate() {
            next.push(z.block(j + 1) - (xi - &xn) * t);
        }
        LiftedVector::from_blocks(&next)
    }
}
