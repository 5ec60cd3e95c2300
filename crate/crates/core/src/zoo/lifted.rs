use std::collections::BTreeSet;

use super::{check_tuple, mat, positive, Betas, Splitting};
use crate::blocks::LiftedVector;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerance, Vector};
use crate::operators::OperatorTuple;
use crate::representation::{Representation, RepresentationParts};

fn at_least(name: &str, n: usize, min: usize) -> Result<usize> {
    if n >= min {
        Ok(n)
    } else {
        Err(Error::param(name, n as f64, &format!("must be at least {min}")))
    }
}

fn sum(vs: impl IntoIterator<Item = Vector>, m: usize) -> Vector {
    vs.into_iter().fold(Vector::zeros(m), |acc, v| acc + v)
}

/// Three-operator splitting with lifting two and relaxation `θ`.
#[derive(Debug, Clone)]
pub struct Ryu {
    theta: f64,
}

impl Ryu {
    pub fn new(theta: f64) -> Result<Self> {
        Ok(Ryu { theta: positive("theta", theta)? })
    }
}

impl Splitting for Ryu {
    fn name(&self) -> &'static str {
        "ryu"
    }

    fn reference(&self) -> &'static str {
        "Ryu (2020)"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("theta", self.theta)]
    }

    fn num_operators(&self) -> usize {
        3
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::new()
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let t = self.theta;
        let parts = RepresentationParts {
            p: 2,
            forward: BTreeSet::new(),
            m: mat(3, 3, &[1., 0., 1., 1., 1., 1., 1., 0., 1.]),
            n: mat(3, 2, &[1., 0., 1., 1., 1., 0.]),
            u: mat(2, 2, &[1., 0., 1., 1.]) * t,
            v: mat(2, 3, &[1., 0., 1., 1., 1., 1.]) * t,
        };
        Representation::new(parts, tol)
    }

    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        Ok(Some(Matrix::identity(2, 2) / self.theta))
    }

    fn convergence_condition(&self, _betas: &Betas) -> Result<bool> {
        Ok(self.theta < 1.0)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        check_tuple(tuple, z, 3, 2)?;
        let t = self.theta;
        let (z1, z2) = (z.block(0), z.block(1));
        let x1 = tuple.operator(0).resolve(1.0, &z1);
        let x2 = tuple.operator(1).resolve(1.0, &(&z2 + &x1));
        let x3 = tuple.operator(2).resolve(1.0, &(&x1 + &x2 - &z1 - &z2));
        LiftedVector::from_blocks(&[&z1 + (&x3 - &x1) * t, &z2 + (&x3 - &x2) * t])
    }
}

/// `n`-operator splitting with lifting `n - 1` and relaxation `θ` (unit step).
#[derive(Debug, Clone)]
pub struct MalitskyTam {
    n: usize,
    theta: f64,
}

impl MalitskyTam {
    pub fn new(n: usize, theta: f64) -> Result<Self> {
        Ok(MalitskyTam { n: at_least("n", n, 2)?, theta: positive("theta", theta)? })
    }

    /// The tridiagonal matrix `Tridiag(-1, 2, -1)` of size `k`.
    pub fn tridiagonal(k: usize) -> Matrix {
        Matrix::from_fn(k, k, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        })
    }
}

impl Splitting for MalitskyTam {
    fn name(&self) -> &'static str {
        "malitsky-tam"
    }

    fn reference(&self) -> &'static str {
        "Malitsky & Tam (2023)"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("n", self.n as f64), ("theta", self.theta)]
    }

    fn num_operators(&self) -> usize {
        self.n
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::new()
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let (n, t) = (self.n, self.theta);
        let d = n - 1;
        let mut m = Matrix::zeros(n, n);
        for i in 0..d {
            for j in 0..=i {
                m[(i, j)] = 1.0;
            }
            m[(i, n - 1)] = 1.0;
        }
        m[(n - 1, 0)] = 1.0;
        m[(n - 1, n - 1)] = 1.0;
        let mut nn = Matrix::zeros(n, d);
        for i in 0..d {
            nn[(i, i)] = 1.0;
        }
        nn[(n - 1, 0)] = 1.0;
        let mut u = Matrix::identity(d, d);
        let mut v = Matrix::zeros(d, n);
        for i in 0..d - 1 {
            u[(i, i + 1)] = -1.0;
            v[(i, i + 1)] = -1.0;
        }
        v.row_mut(d - 1).fill(1.0);
        let parts = RepresentationParts { p: n - 1, forward: BTreeSet::new(), m, n: nn, u: u * t, v: v * t };
        Representation::new(parts, tol)
    }

    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        Ok(Some(Matrix::identity(self.n - 1, self.n - 1) / self.theta))
    }

    fn convergence_condition(&self, _betas: &Betas) -> Result<bool> {
        Ok(self.theta < 1.0)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        let n = self.n;
        check_tuple(tuple, z, n, n - 1)?;
        let zs = z.blocks();
        let mut x = Vec::with_capacity(n);
        x.push(tuple.operator(0).resolve(1.0, &zs[0]));
        for i in 1..n - 1 {
            let arg = &zs[i] - &zs[i - 1] + &x[i - 1];
            x.push(tuple.operator(i).resolve(1.0, &arg));
        }
        let arg = &x[0] + &x[n - 2] - &zs[n - 2];
        x.push(tuple.operator(n - 1).resolve(1.0, &arg));
        let next: Vec<Vector> = (0..n - 1).map(|i| &zs[i] + (&x[i + 1] - &x[i]) * self.theta).collect();
        LiftedVector::from_blocks(&next)
    }
}

/// Product-space Douglas-Rachford with the first operator as the averaging
/// anchor: `n` operators, lifting `n - 1`.
#[derive(Debug, Clone)]
pub struct Campoy {
    n: usize,
    gamma: f64,
    theta: f64,
}

impl Campoy {
    pub fn new(n: usize, gamma: f64, theta: f64) -> Result<Self> {
        Ok(Campoy { n: at_least("n", n, 2)?, gamma: positive("gamma", gamma)?, theta: positive("theta", theta)? })
    }
}

impl Splitting for Campoy {
    fn name(&self) -> &'static str {
        "campoy"
    }

    fn reference(&self) -> &'static str {
        "Campoy (2022)"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        vec![("n", self.n as f64), ("gamma", self.gamma), ("theta", self.theta)]
    }

    fn num_operators(&self) -> usize {
        self.n
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::new()
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let (n, g, t) = (self.n, self.gamma, self.theta);
        let d = n - 1;
        let k = d as f64;
        let c = (3.0 - n as f64) / k;
        let mut m = Matrix::zeros(n, n);
        m[(0, 0)] = g / k;
        m[(0, n - 1)] = 1.0;
        for i in 1..n - 1 {
            m[(i, 0)] = 2.0 * g / k;
            m[(i, i)] = g;
            m[(i, n - 1)] = 1.0;
        }
        m[(n - 1, 0)] = c;
        for j in 1..n - 1 {
            m[(n - 1, j)] = -1.0;
        }
        m[(n - 1, n - 1)] = 1.0 / g;
        let mut nn = Matrix::zeros(n, d);
        nn.row_mut(0).fill(1.0 / k);
        for i in 1..n - 1 {
            nn.row_mut(i).fill(2.0 / k);
            nn[(i, i - 1)] = c;
        }
        nn.row_mut(n - 1).fill(2.0 / (g * k));
        nn[(n - 1, d - 1)] = c / g;
        let mut u = Matrix::zeros(d, d);
        let mut v = Matrix::zeros(d, n);
        for i in 0..d - 1 {
            u.row_mut(i).fill(-t / k);
            u[(i, i)] += t;
            v[(i, 0)] = -t * g / k;
            v[(i, i + 1)] = -t * g;
        }
        u.row_mut(d - 1).fill(t / k);
        v[(d - 1, 0)] = t * g / k;
        v[(d - 1, n - 1)] = t;
        let parts = RepresentationParts { p: n - 1, forward: BTreeSet::new(), m, n: nn, u, v };
        Representation::new(parts, tol)
    }

    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        Ok(Some(Matrix::identity(self.n - 1, self.n - 1) / (self.theta * self.gamma)))
    }

    fn convergence_condition(&self, _betas: &Betas) -> Result<bool> {
        Ok(self.theta < 2.0)
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        let (n, g, t) = (self.n, self.gamma, self.theta);
        check_tuple(tuple, z, n, n - 1)?;
        let zs = z.blocks();
        let k = (n - 1) as f64;
        let mean = sum(zs.iter().cloned(), tuple.m()) / k;
        let x1 = tuple.operator(0).resolve(g / k, &mean);
        let next: Vec<Vector> = (1..n)
            .map(|i| {
                let xi = tuple.operator(i).resolve(g, &(&x1 * 2.0 - &zs[i - 1]));
                &zs[i - 1] + (xi - &x1) * t
            })
            .collect();
        LiftedVector::from_blocks(&next)
    }
}

/// Projective splitting with steps `τ_1, …, τ_n` and relaxation `θ`.
#[derive(Debug, Clone)]
pub struct Projective {
    taus: Vec<f64>,
    theta: f64,
}

impl Projective {
    pub fn new(taus: Vec<f64>, theta: f64) -> Result<Self> {
        at_least("n", taus.len(), 2)?;
        for &t in &taus {
            positive("tau", t)?;
        }
        Ok(Projective { taus, theta: positive("theta", theta)? })
    }

    fn kernel(&self) -> Matrix {
        let n = self.taus.len();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n - 1 {
            m[(i, i)] = self.taus[i];
            m[(i, n - 1)] = 1.0;
            m[(n - 1, i)] = -1.0;
        }
        m[(n - 1, n - 1)] = 1.0 / self.taus[n - 1];
        m
    }

    /// The common step `t` when `τ_i = t` for `i < n` and `τ_n = 1/t`.
    pub fn uniform_step(&self) -> Option<f64> {
        let n = self.taus.len();
        let t = self.taus[0];
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        (self.taus[..n - 1].iter().all(|&s| close(s, t)) && close(self.taus[n - 1] * t, 1.0)).then_some(t)
    }
}

impl Splitting for Projective {
    fn name(&self) -> &'static str {
        "projective"
    }

    fn reference(&self) -> &'static str {
        "Eckstein & Svaiter (2008); Johnstone & Eckstein (2021)"
    }

    fn parameters(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![("n", self.taus.len() as f64), ("theta", self.theta)];
        out.extend(self.taus.iter().map(|&t| ("tau", t)));
        out
    }

    fn num_operators(&self) -> usize {
        self.taus.len()
    }

    fn forward_set(&self) -> BTreeSet<usize> {
        BTreeSet::new()
    }

    fn representation(&self, tol: &Tolerance) -> Result<Representation> {
        let m = self.kernel();
        let n = self.taus.len();
        let parts = RepresentationParts { p: n - 1, forward: BTreeSet::new(), m: m.clone(), n: m.clone(), u: &m * self.theta, v: m * self.theta };
        Representation::new(parts, tol)
    }

    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        let n = self.taus.len();
        Ok(Some(Matrix::identity(n, n) / self.theta))
    }

    /// For uniform steps `t` the condition is `θ < 2t / (n - 1 + t²)`;
    /// otherwise positive definiteness of `M + Mᵀ - θ MᵀM` is tested directly.
    fn convergence_condition(&self, _betas: &Betas) -> Result<bool> {
        let n = self.taus.len() as f64;
        match self.uniform_step() {
            Some(t) => Ok(self.theta < 2.0 * t / (n - 1.0 + t * t)),
            None => {
                let m = self.kernel();
                let w = &m + m.transpose() - m.transpose() * &m * self.theta;
                Ok(linalg::min_eig(&w) > 0.0)
            }
        }
    }

    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        let n = self.taus.len();
        check_tuple(tuple, z, n, n)?;
        let (taus, t) = (&self.taus, self.theta);
        let zs = z.blocks();
        let zn = &zs[n - 1];
        let mut x: Vec<Vector> = (0..n - 1).map(|i| tuple.operator(i).resolve(taus[i], &(&zs[i] * taus[i] + zn))).collect();
        let tn = taus[n - 1];
        let z_sum = sum(zs[..n - 1].iter().cloned(), tuple.m());
        x.push(tuple.operator(n - 1).resolve(tn, &(zn - z_sum * tn)));
        let xn = &x[n - 1];
        let mut next: Vec<Vector> = (0..n - 1).map(|i| &zs[i] - (&x[i] - xn) * t).collect();
        let inv_sum = 1.0 / tn + taus[..n - 1].iter().map(|s| 1.0 / s).sum::<f64>();
        let weighted = sum((0..n - 1).map(|j| &x[j] / taus[j]), tuple.m()) + xn / tn;
        next.push(zn - zn * (t * inv_sum) + weighted * t);
        LiftedVector::from_blocks(&next)
    }
}
