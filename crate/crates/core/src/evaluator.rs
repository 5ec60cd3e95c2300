//! One application of the fixed-point map `T` of a representation.

use crate::blocks::{DualVector, LiftedVector};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tolerance, Vector};
use crate::operators::{HatMode, OperatorTuple};
use crate::representation::{dependency_stages, Representation};

/// A representation bound to an operator tuple, with the back-substitution
/// schedule precomputed.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    rep: &'a Representation,
    tuple: &'a OperatorTuple,
    lower: Matrix,
    deps: Vec<Vec<usize>>,
    modes: Vec<HatMode>,
    order: Vec<usize>,
}

impl<'a> Evaluator<'a> {
    pub fn new(rep: &'a Representation, tuple: &'a OperatorTuple, tol: &Tolerance) -> Result<Self> {
        let n = rep.num_operators();
        if tuple.n() != n {
            return Err(Error::Incompatible(format!("representation has {n} operators, tuple has {}", tuple.n())));
        }
        for &i in rep.forward_set() {
            if !tuple.operator(i).is_single_valued() {
                return Err(Error::NotSingleValued { index: i, kind: tuple.operator(i).kind() });
            }
        }
        let lower = rep.lower();
        let stages = dependency_stages(rep.m(), rep.p(), tol)?;
        let deps = crate::representation::schedule_dependencies(&lower, tol);
        let modes = (0..n)
            .map(|i| {
                if rep.forward_set().contains(&i) {
                    HatMode::Forward
                } else if i == rep.p() {
                    HatMode::Primal(lower[(i, i)])
                } else {
                    HatMode::Dual(lower[(i, i)])
                }
            })
            .collect();
        Ok(Evaluator { rep, tuple, lower, deps, modes, order: stages.concat() })
    }

    pub fn representation(&self) -> &Representation {
        self.rep
    }

    pub fn tuple(&self) -> &OperatorTuple {
        self.tuple
    }

    /// Solves `y = (M + Φ_{A,p})^{-1} x` by back-substitution in stage order.
    pub fn pd_resolvent_solve(&self, x: &DualVector) -> Result<DualVector> {
        self.solve_in_order(x, &self.order)
    }

    /// Same as [`Evaluator::pd_resolvent_solve`] with an explicit evaluation
    /// order, which must list every index after all of its dependencies.
    pub fn pd_resolvent_solve_in_order(&self, x: &DualVector, order: &[usize]) -> Result<DualVector> {
        let n = self.rep.num_operators();
        let mut seen = vec![false; n];
        for &i in order {
            if i >= n || seen[i] || self.deps[i].iter().any(|&j| !seen[j]) {
                return Err(Error::Incompatible(format!("evaluation order {order:?} violates dependencies")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Incompatible(format!("evaluation order {order:?} is incomplete")));
        }
        self.solve_in_order(x, order)
    }

    fn solve_in_order(&self, x: &DualVector, order: &[usize]) -> Result<DualVector> {
        let n = self.rep.num_operators();
        if x.len() != n || x.dim() != self.tuple.m() {
            return Err(Error::dims("dual vector", format!("{} blocks of size {}", n, self.tuple.m()), format!("{} blocks of size {}", x.len(), x.dim())));
        }
        let mut y = DualVector::zeros(self.tuple.m(), n);
        for &i in order {
            let mut arg = x.block(i);
            for &j in &self.deps[i] {
                arg -= y.block(j) * self.lower[(i, j)];
            }
            let yi = self.tuple.operator(i).apply_hat(self.modes[i], &arg).map_err(|e| match e {
                Error::NotSingleValued { kind, .. } => Error::NotSingleValued { index: i, kind },
                other => other,
            })?;
            y.set_block(i, &yi);
        }
        Ok(y)
    }

    /// Returns `(y, T z)` with `y = (M + Φ)^{-1} N z` and `T z = z - U z + V y`.
    pub fn evaluate(&self, z: &LiftedVector) -> Result<(DualVector, LiftedVector)> {
        if z.len() != self.rep.lifting() || z.dim() != self.tuple.m() {
            return Err(Error::dims(
                "lifted vector",
                format!("{} blocks of size {}", self.rep.lifting(), self.tuple.m()),
                format!("{} blocks of size {}", z.len(), z.dim()),
            ));
        }
        let y = self.pd_resolvent_solve(&z.apply(self.rep.n())?)?;
        let next = z.sub(&z.apply(self.rep.u())?).add(&y.apply(self.rep.v())?);
        Ok((y, next))
    }

    /// `‖z - T z‖`.
    pub fn fixed_point_residual(&self, z: &LiftedVector) -> Result<f64> {
        let (_, next) = self.evaluate(z)?;
        Ok(z.sub(&next).norm())
    }

    /// The primal estimate `y_p` for `y = (M + Φ)^{-1} N z` and an upper bound
    /// on `dist(0, Σ A_i y_p)`.
    pub fn solution_from_point(&self, z: &LiftedVector, tol: &Tolerance) -> Result<(Vector, f64)> {
        let y = self.pd_resolvent_solve(&z.apply(self.rep.n())?)?;
        let x = y.block(self.rep.p());
        Ok((x.clone(), self.inclusion_residual(&x, &y, tol)))
    }

    /// Projects the dual blocks `y_i`, `i ≠ p`, onto `A_i(x)` and closes the
    /// sum with the nearest element of `A_p(x)`; returns `‖Σ u_i‖`.
    pub fn inclusion_residual(&self, x: &Vector, y: &DualVector, tol: &Tolerance) -> f64 {
        let p = self.rep.p();
        let mut sum = Vector::zeros(x.len());
        for i in (0..self.rep.num_operators()).filter(|&i| i != p) {
            match self.tuple.operator(i).project_image(x, &y.block(i), tol.residual_tol) {
                Some(u) => sum += u,
                None => return f64::INFINITY,
            }
        }
        match self.tuple.operator(p).project_image(x, &-&sum, tol.residual_tol) {
            Some(u) => (sum + u).norm(),
            None => f64::INFINITY,
        }
    }
}

/// Convenience wrapper around [`Evaluator::evaluate`].
pub fn evaluate(rep: &Representation, tuple: &OperatorTuple, z: &LiftedVector) -> Result<(DualVector, LiftedVector)> {
    Evaluator::new(rep, tuple, &Tolerance::default())?.evaluate(z)
}

/// Convenience wrapper around [`Evaluator::pd_resolvent_solve`].
pub fn pd_resolvent_solve(rep: &Representation, tuple: &OperatorTuple, x: &DualVector) -> Result<DualVector> {
    Evaluator::new(rep, tuple, &Tolerance::default())?.pd_resolvent_solve(x)
}

/// Convenience wrapper around [`Evaluator::fixed_point_residual`].
pub fn fixed_point_residual(rep: &Representation, tuple: &OperatorTuple, z: &LiftedVector) -> Result<f64> {
    Evaluator::new(rep, tuple, &Tolerance::default())?.fixed_point_residual(z)
}

/// Convenience wrapper around [`Evaluator::solution_from_point`].
pub fn solution_from_point(rep: &Representation, tuple: &OperatorTuple, z: &LiftedVector) -> Result<(Vector, f64)> {
    let tol = Tolerance::default();
    Evaluator::new(rep, tuple, &tol)?.solution_from_point(z, &tol)
}
