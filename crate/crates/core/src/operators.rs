//! Maximal monotone operators on `R^m` with closed-form resolvents.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerance, Vector};

/// A user-supplied operator. Only the resolvent is mandatory.
pub trait CustomOperator: Send + Sync + fmt::Debug {
    /// `J_{γA}(x) = (Id + γA)^{-1} x`.
    fn resolve(&self, gamma: f64, x: &Vector) -> Vector;

    /// Whether [`CustomOperator::forward`] is implemented.
    fn is_single_valued(&self) -> bool {
        false
    }

    /// `A(x)` for single-valued operators.
    fn forward(&self, _x: &Vector) -> Option<Vector> {
        None
    }

    /// Nearest point of `A(x)` to `u`, or `None` when `x ∉ dom A` or unknown.
    fn project_image(&self, x: &Vector, _u: &Vector, _tol: f64) -> Option<Vector> {
        self.forward(x)
    }
}

/// Cocoercivity of a single-valued operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cocoercivity {
    /// Every `β > 0` is valid (the zero operator).
    Unbounded,
    /// The largest valid constant.
    Bounded(f64),
    /// Not cocoercive for any `β > 0`.
    NotCocoercive,
}

impl Cocoercivity {
    pub fn value(self) -> Option<f64> {
        match self {
            Cocoercivity::Unbounded => Some(f64::INFINITY),
            Cocoercivity::Bounded(b) => Some(b),
            Cocoercivity::NotCocoercive => None,
        }
    }
}

/// How an operator enters the back-substitution of the evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HatMode {
    /// Forward index: `y = A x`.
    Forward,
    /// Primal index with diagonal `l > 0`: `y = (l Id + A)^{-1} x`.
    Primal(f64),
    /// Other index with diagonal `l > 0`: `y = (l Id + A^{-1})^{-1} x`.
    Dual(f64),
}

#[derive(Clone)]
pub enum Operator {
    Zero,
    /// `x ↦ K x + b` with `K + Kᵀ ⪰ 0`.
    AffineMonotone { k: Matrix, b: Vector },
    /// `x ↦ P x + q`, the gradient of `½xᵀPx + qᵀx` with `P ⪰ 0` symmetric.
    QuadraticGradient { p: Matrix, q: Vector },
    /// `x ↦ K x` with `Kᵀ = -K`.
    SkewLinear { k: Matrix },
    /// Normal cone of the box `[lo, hi]`.
    BoxNormalCone { lo: Vector, hi: Vector },
    /// Subdifferential of `μ‖x‖₁`.
    L1Subdifferential { mu: f64 },
    /// `λ A` with `λ > 0`.
    Scaled { lambda: f64, inner: Box<Operator> },
    Custom(Arc<dyn CustomOperator>),
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operator::Zero => write!(f, "Zero"),
            Operator::AffineMonotone { k, b } => write!(f, "AffineMonotone({}x{}, |b|={})", k.nrows(), k.ncols(), b.norm()),
            Operator::QuadraticGradient { p, q } => write!(f, "QuadraticGradient({}x{}, |q|={})", p.nrows(), p.ncols(), q.norm()),
            Operator::SkewLinear { k } => write!(f, "SkewLinear({}x{})", k.nrows(), k.ncols()),
            Operator::BoxNormalCone { lo, hi } => write!(f, "BoxNormalCone({:?}, {:?})", lo.as_slice(), hi.as_slice()),
            Operator::L1Subdifferential { mu } => write!(f, "L1Subdifferential({mu})"),
            Operator::Scaled { lambda, inner } => write!(f, "Scaled({lambda}, {inner:?})"),
            Operator::Custom(c) => write!(f, "Custom({c:?})"),
        }
    }
}

fn solve(a: Matrix, rhs: &Vector) -> Vector {
    a.lu().solve(rhs).expect("monotone shift is invertible")
}

impl Operator {
    /// Validated affine operator.
    pub fn affine(k: Matrix, b: Vector) -> Result<Operator> {
        linalg::ensure_finite(&k, "affine K")?;
        if !k.is_square() || k.nrows() != b.len() {
            return Err(Error::dims("affine operator", "square K matching b", format!("{}x{} / {}", k.nrows(), k.ncols(), b.len())));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("affine b"));
        }
        if linalg::min_eig(&k) < -1e-12 * k.norm().max(1.0) {
            return Err(Error::param("K", linalg::min_eig(&k), "symmetric part must be positive semidefinite"));
        }
        Ok(Operator::AffineMonotone { k, b })
    }

    /// Validated quadratic gradient.
    pub fn quadratic(p: Matrix, q: Vector) -> Result<Operator> {
        linalg::ensure_finite(&p, "quadratic P")?;
        if !p.is_square() || p.nrows() != q.len() {
            return Err(Error::dims("quadratic operator", "square P matching q", format!("{}x{} / {}", p.nrows(), p.ncols(), q.len())));
        }
        if (&p - p.transpose()).amax() > 1e-12 * p.amax().max(1.0) {
            return Err(Error::InvalidParameter { name: "P".into(), value: (&p - p.transpose()).amax(), reason: "must be symmetric".into() });
        }
        if linalg::min_eig(&p) < -1e-12 * p.norm().max(1.0) {
            return Err(Error::param("P", linalg::min_eig(&p), "must be positive semidefinite"));
        }
        Ok(Operator::QuadraticGradient { p, q })
    }

    /// Validated skew-symmetric linear map.
    pub fn skew(k: Matrix) -> Result<Operator> {
        linalg::ensure_finite(&k, "skew K")?;
        if !k.is_square() {
            return Err(Error::dims("skew operator", "square K", format!("{}x{}", k.nrows(), k.ncols())));
        }
        let asym = (&k + k.transpose()).amax();
        if asym > 1e-12 * k.amax().max(1.0) {
            return Err(Error::param("K", asym, "must satisfy K^T = -K"));
        }
        Ok(Operator::SkewLinear { k })
    }

    /// Validated box normal cone.
    pub fn boxed(lo: Vector, hi: Vector) -> Result<Operator> {
        if lo.len() != hi.len() {
            return Err(Error::dims("box bounds", lo.len(), hi.len()));
        }
        if lo.iter().chain(hi.iter()).any(|v| v.is_nan()) {
            return Err(Error::NonFinite("box bounds"));
        }
        if let Some(i) = (0..lo.len()).find(|&i| lo[i] > hi[i]) {
            return Err(Error::param("lo", lo[i], "lower bound exceeds upper bound"));
        }
        Ok(Operator::BoxNormalCone { lo, hi })
    }

    pub fn l1(mu: f64) -> Result<Operator> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::param("mu", mu, "must be finite and nonnegative"));
        }
        Ok(Operator::L1Subdifferential { mu })
    }

    pub fn scaled(lambda: f64, inner: Operator) -> Result<Operator> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::param("lambda", lambda, "must be positive"));
        }
        Ok(Operator::Scaled { lambda, inner: Box::new(inner) })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Operator::Zero => "zero",
            Operator::AffineMonotone { .. } => "affine",
            Operator::QuadraticGradient { .. } => "quadratic",
            Operator::SkewLinear { .. } => "skew",
            Operator::BoxNormalCone { .. } => "box",
            Operator::L1Subdifferential { .. } => "l1",
            Operator::Scaled { .. } => "scaled",
            Operator::Custom(_) => "custom",
        }
    }

    /// Dimension fixed by the operator's data, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Operator::AffineMonotone { b, .. } => Some(b.len()),
            Operator::QuadraticGradient { q, .. } => Some(q.len()),
            Operator::SkewLinear { k } => Some(k.nrows()),
            Operator::BoxNormalCone { lo, .. } => Some(lo.len()),
            Operator::Scaled { inner, .. } => inner.dim(),
            _ => None,
        }
    }

    pub fn is_single_valued(&self) -> bool {
        match self {
            Operator::Zero
            | Operator::AffineMonotone { .. }
            | Operator::QuadraticGradient { .. }
            | Operator::SkewLinear { .. } => true,
            Operator::BoxNormalCone { .. } | Operator::L1Subdifferential { .. } => false,
            Operator::Scaled { inner, .. } => inner.is_single_valued(),
            Operator::Custom(c) => c.is_single_valued(),
        }
    }

    /// `(K, b)` with `A x = K x + b` on `R^m`, for affine single-valued operators.
    pub fn linear_part(&self, m: usize) -> Option<(Matrix, Vector)> {
        match self {
            Operator::Zero => Some((Matrix::zeros(m, m), Vector::zeros(m))),
            Operator::AffineMonotone { k, b } => Some((k.clone(), b.clone())),
            Operator::QuadraticGradient { p, q } => Some((p.clone(), q.clone())),
            Operator::SkewLinear { k } => Some((k.clone(), Vector::zeros(k.nrows()))),
            Operator::Scaled { lambda, inner } => inner.linear_part(m).map(|(k, b)| (k * *lambda, b * *lambda)),
            _ => None,
        }
    }

    /// `A(x)`; fails for set-valued operators.
    pub fn forward(&self, x: &Vector) -> Result<Vector> {
        match self {
            Operator::Zero => Ok(Vector::zeros(x.len())),
            Operator::AffineMonotone { k, b } => Ok(k * x + b),
            Operator::QuadraticGradient { p, q } => Ok(p * x + q),
            Operator::SkewLinear { k } => Ok(k * x),
            Operator::Scaled { lambda, inner } => Ok(inner.forward(x)? * *lambda),
            Operator::Custom(c) => c.forward(x).ok_or(Error::NotSingleValued { index: 0, kind: "custom" }),
            other => Err(Error::NotSingleValued { index: 0, kind: other.kind() }),
        }
    }

    /// `J_{γA}(x) = (Id + γA)^{-1} x` for `γ > 0`.
    pub fn resolve(&self, gamma: f64, x: &Vector) -> Vector {
        let m = x.len();
        match self {
            Operator::Zero => x.clone(),
            Operator::AffineMonotone { k, b } => solve(Matrix::identity(m, m) + k * gamma, &(x - b * gamma)),
            Operator::QuadraticGradient { p, q } => solve(Matrix::identity(m, m) + p * gamma, &(x - q * gamma)),
            Operator::SkewLinear { k } => solve(Matrix::identity(m, m) + k * gamma, x),
            Operator::BoxNormalCone { lo, hi } => x.zip_zip_map(lo, hi, |v, l, h| v.max(l).min(h)),
            Operator::L1Subdifferential { mu } => {
                let t = gamma * mu;
                x.map(|v| v.signum() * (v.abs() - t).max(0.0))
            }
            Operator::Scaled { lambda, inner } => inner.resolve(gamma * lambda, x),
            Operator::Custom(c) => c.resolve(gamma, x),
        }
    }

    /// `(l Id + A^{-1})^{-1} x = (x - J_{lA} x) / l` for `l > 0`.
    pub fn resolve_inverse_scaled(&self, l: f64, x: &Vector) -> Vector {
        (x - self.resolve(l, x)) / l
    }

    /// One back-substitution step of the evaluator.
    pub fn apply_hat(&self, mode: HatMode, x: &Vector) -> Result<Vector> {
        match mode {
            HatMode::Forward => self.forward(x),
            HatMode::Primal(l) => Ok(self.resolve(1.0 / l, &(x / l))),
            HatMode::Dual(l) => Ok(self.resolve_inverse_scaled(l, x)),
        }
    }

    /// Largest `β` with `⟨A x - A y, x - y⟩ ≥ β ‖A x - A y‖²`.
    pub fn cocoercivity(&self) -> Cocoercivity {
        match self {
            Operator::Zero => Cocoercivity::Unbounded,
            Operator::AffineMonotone { k, .. } | Operator::QuadraticGradient { p: k, .. } | Operator::SkewLinear { k } => {
                linear_cocoercivity(k)
            }
            Operator::Scaled { lambda, inner } => match inner.cocoercivity() {
                Cocoercivity::Bounded(b) => Cocoercivity::Bounded(b / lambda),
                other => other,
            },
            _ => Cocoercivity::NotCocoercive,
        }
    }

    /// Nearest point of `A(x)` to `u`; `None` when `x` lies outside `dom A`
    /// by more than `tol`. Points within `tol` of a kink are treated as on it.
    pub fn project_image(&self, x: &Vector, u: &Vector, tol: f64) -> Option<Vector> {
        match self {
            Operator::BoxNormalCone { lo, hi } => {
                let mut out = Vector::zeros(x.len());
                for i in 0..x.len() {
                    if x[i] < lo[i] - tol || x[i] > hi[i] + tol {
                        return None;
                    }
                    let at_lo = (x[i] - lo[i]).abs() <= tol;
                    let at_hi = (x[i] - hi[i]).abs() <= tol;
                    out[i] = match (at_lo, at_hi) {
                        (true, true) => u[i],
                        (true, false) => u[i].min(0.0),
                        (false, true) => u[i].max(0.0),
                        (false, false) => 0.0,
                    };
                }
                Some(out)
            }
            Operator::L1Subdifferential { mu } => Some(Vector::from_fn(x.len(), |i, _| {
                if x[i].abs() <= tol {
                    u[i].clamp(-mu, *mu)
                } else {
                    mu * x[i].signum()
                }
            })),
            Operator::Scaled { lambda, inner } => inner.project_image(x, &(u / *lambda), tol).map(|v| v * *lambda),
            Operator::Custom(c) => c.project_image(x, u, tol),
            single => single.forward(x).ok(),
        }
    }

    /// Distance from `u` to `A(x)` (`+inf` outside the domain).
    pub fn dist_to_image(&self, x: &Vector, u: &Vector, tol: f64) -> f64 {
        self.project_image(x, u, tol).map_or(f64::INFINITY, |v| (v - u).norm())
    }
}

fn linear_cocoercivity(k: &Matrix) -> Cocoercivity {
    let tol = Tolerance::default();
    if k.amax() == 0.0 {
        return Cocoercivity::Unbounded;
    }
    // On (ker K)^⊥, β = λmin(Kᵀ K)^{-1/2} sym(K) (Kᵀ K)^{-1/2}.
    let z = linalg::range_basis(&k.transpose(), &tol);
    let a = z.transpose() * linalg::sym(k) * &z;
    let b = z.transpose() * k.transpose() * k * &z;
    let chol = match b.cholesky() {
        Some(c) => c,
        None => return Cocoercivity::NotCocoercive,
    };
    let l_inv = chol.l().try_inverse().expect("cholesky factor is invertible");
    let beta = linalg::min_eig(&(&l_inv * a * l_inv.transpose()));
    if beta > 1e-12 {
        Cocoercivity::Bounded(beta)
    } else {
        Cocoercivity::NotCocoercive
    }
}

/// Operators `(A_1, …, A_n)` on `R^m` with the forward set `F` and cocoercivity
/// constants for its members. Indices are 0-based.
#[derive(Debug, Clone)]
pub struct OperatorTuple {
    m: usize,
    operators: Vec<Operator>,
    forward: BTreeSet<usize>,
    betas: BTreeMap<usize, f64>,
}

impl OperatorTuple {
    /// Checks dimensions and that every forward operator is single-valued.
    pub fn new(m: usize, operators: Vec<Operator>, forward: BTreeSet<usize>) -> Result<Self> {
        let n = operators.len();
        if n == 0 {
            return Err(Error::dims("operator tuple", "n >= 1", 0));
        }
        for (i, op) in operators.iter().enumerate() {
            if let Some(d) = op.dim() {
                if d != m {
                    return Err(Error::dims("operator dimension", m, d));
                }
            }
            if forward.contains(&i) && !op.is_single_valued() {
                return Err(Error::NotSingleValued { index: i, kind: op.kind() });
            }
        }
        if let Some(&i) = forward.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        Ok(OperatorTuple { m, operators, forward, betas: BTreeMap::new() })
    }

    /// Attaches user cocoercivity constants. Every forward index needs one.
    pub fn with_betas(mut self, betas: BTreeMap<usize, f64>) -> Result<Self> {
        for &i in &self.forward {
            match betas.get(&i) {
                Some(&b) if b.is_finite() && b > 0.0 => {}
                Some(&b) => return Err(Error::param("beta", b, "must be positive and finite")),
                None => return Err(Error::MissingBeta(i)),
            }
        }
        self.betas = betas.into_iter().filter(|(i, _)| self.forward.contains(i)).collect();
        Ok(self)
    }

    /// Attaches the largest valid constants computed from the operators. The
    /// zero operator, whose constant is unbounded, receives `1`.
    pub fn with_computed_betas(self) -> Result<Self> {
        let mut betas = BTreeMap::new();
        for &i in &self.forward {
            let b = match self.operators[i].cocoercivity() {
                Cocoercivity::Unbounded => 1.0,
                Cocoercivity::Bounded(b) => b,
                Cocoercivity::NotCocoercive => {
                    return Err(Error::param("beta", 0.0, &format!("forward operator {i} is not cocoercive")))
                }
            };
            betas.insert(i, b);
        }
        self.with_betas(betas)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn operator(&self, i: usize) -> &Operator {
        &self.operators[i]
    }

    pub fn forward_set(&self) -> &BTreeSet<usize> {
        &self.forward
    }

    pub fn betas(&self) -> &BTreeMap<usize, f64> {
        &self.betas
    }

    /// Forward indices whose user constant exceeds the computed one.
    pub fn beta_warnings(&self) -> Vec<(usize, f64, f64)> {
        self.betas
            .iter()
            .filter_map(|(&i, &b)| match self.operators[i].cocoercivity() {
                Cocoercivity::Bounded(c) if b > c * (1.0 + 1e-12) => Some((i, b, c)),
                Cocoercivity::NotCocoercive => Some((i, b, 0.0)),
                _ => None,
            })
            .collect()
    }

    /// An upper bound on `dist(0, Σ A_i x)` built from candidate elements
    /// `cands[i]`, each projected onto `A_i(x)`. Returns the residual and the
    /// projected elements; the residual is `+inf` if `x` leaves a domain.
    pub fn inclusion_residual(&self, x: &Vector, cands: &[Vector], tol: f64) -> (f64, Vec<Vector>) {
        let mut elems = Vec::with_capacity(self.n());
        for (op, c) in self.operators.iter().zip(cands) {
            match op.project_image(x, c, tol) {
                Some(v) => elems.push(v),
                None => return (f64::INFINITY, Vec::new()),
            }
        }
        let sum = elems.iter().fold(Vector::zeros(x.len()), |acc, v| acc + v);
        (sum.norm(), elems)
    }
}

/// A certified zero of `Σ A_i` together with elements `u_i ∈ A_i x` summing to
/// (nearly) zero.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub x: Vector,
    pub elements: Vec<Vector>,
    pub residual: f64,
}

/// Options of the reference run used when the tuple is not purely affine.
#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub max_iter: usize,
    pub step: f64,
    pub stop_tol: f64,
    pub certificate_tol: f64,
    pub kink_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            max_iter: 1_000_000,
            step: 1.0,
            stop_tol: 1e-14,
            certificate_tol: 1e-7,
            kink_tol: 1e-9,
        }
    }
}

/// Computes a zero of `Σ A_i`.
///
/// Purely affine tuples are solved directly. Otherwise a consensus
/// Douglas-Rachford run in the product space is used and its output must pass
/// an inclusion certificate.
pub fn zero_of_sum_oracle(tuple: &OperatorTuple, opts: &OracleOptions) -> Result<OracleSolution> {
    let m = tuple.m();
    let parts: Option<Vec<(Matrix, Vector)>> = tuple.operators().iter().map(|op| op.linear_part(m)).collect();
    let (x, cands) = match parts {
        Some(parts) => {
            let k_sum = parts.iter().fold(Matrix::zeros(m, m), |acc, (k, _)| acc + k);
            let b_sum = parts.iter().fold(Vector::zeros(m), |acc, (_, b)| acc + b);
            let x = match k_sum.clone().lu().solve(&(-&b_sum)) {
                Some(x) if x.iter().all(|v| v.is_finite()) => x,
                _ => linalg::pinv(&k_sum, &Tolerance::default()) * (-b_sum),
            };
            let cands = parts.iter().map(|(k, b)| k * &x + b).collect();
            (x, cands)
        }
        None => consensus_douglas_rachford(tuple, opts),
    };
    let (residual, elements) = tuple.inclusion_residual(&x, &cands, opts.kink_tol);
    if !(residual <= opts.certificate_tol) {
        return Err(Error::OracleCertificate { residual });
    }
    Ok(OracleSolution { x, elements, residual })
}

fn consensus_douglas_rachford(tuple: &OperatorTuple, opts: &OracleOptions) -> (Vector, Vec<Vector>) {
    let n = tuple.n();
    let g = opts.step;
    let mut z = vec![Vector::zeros(tuple.m()); n];
    for _ in 0..opts.max_iter {
        let mean = z.iter().fold(Vector::zeros(tuple.m()), |acc, v| acc + v) / n as f64;
        let mut change = 0.0;
        for i in 0..n {
            let w = tuple.operator(i).resolve(g, &(&mean * 2.0 - &z[i]));
            let step = w - &mean;
            change += step.norm_squared();
            z[i] += step;
        }
        if change.sqrt() <= opts.stop_tol {
            break;
        }
    }
    let mean = z.iter().fold(Vector::zeros(tuple.m()), |acc, v| acc + v) / n as f64;
    let wi: Vec<Vector> = (0..n).map(|i| tuple.operator(i).resolve(g, &(&mean * 2.0 - &z[i]))).collect();
    let x = wi.iter().fold(Vector::zeros(tuple.m()), |acc, v| acc + v) / n as f64;
    let cands = (0..n).map(|i| (&mean * 2.0 - &z[i] - &wi[i]) / g).collect();
    (x, cands)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_vec(xs.to_vec())
    }

    #[test]
    fn l1_resolve_is_soft_threshold() {
        let op = Operator::l1(1.0).unwrap();
        let out = op.resolve(0.5, &v(&[2.0, -0.3, -1.0]));
        assert_eq!(out.as_slice(), &[1.5, 0.0, -0.5]);
    }

    #[test]
    fn box_resolve_is_projection() {
        let op = Operator::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        assert_eq!(op.resolve(3.0, &v(&[2.0, -1.0])).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn affine_resolve_solves_shifted_system() {
        let op = Operator::affine(Matrix::identity(1, 1), v(&[-1.0])).unwrap();
        let y = op.resolve(1.0, &v(&[0.0]));
        assert!((y[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn forward_rejects_set_valued() {
        let op = Operator::l1(1.0).unwrap();
        assert!(matches!(op.forward(&v(&[0.0])), Err(Error::NotSingleValued { .. })));
    }

    #[test]
    fn quadratic_cocoercivity_is_inverse_lipschitz() {
        let p = Matrix::from_diagonal(&v(&[1.0, 4.0]));
        let op = Operator::quadratic(p, v(&[0.0, 0.0])).unwrap();
        match op.cocoercivity() {
            Cocoercivity::Bounded(b) => assert!((b - 0.25).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert_eq!(Operator::Zero.cocoercivity(), Cocoercivity::Unbounded);
        let skew = Operator::skew(Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        assert_eq!(skew.cocoercivity(), Cocoercivity::NotCocoercive);
    }

    #[test]
    fn scaled_cocoercivity_divides() {
        let op = Operator::scaled(2.0, Operator::quadratic(Matrix::identity(1, 1), v(&[0.0])).unwrap()).unwrap();
        assert_eq!(op.cocoercivity(), Cocoercivity::Bounded(0.5));
    }

    #[test]
    fn invalid_constructors_rejected() {
        assert!(Operator::affine(Matrix::from_row_slice(1, 1, &[-1.0]), v(&[0.0])).is_err());
        assert!(Operator::skew(Matrix::identity(2, 2)).is_err());
        assert!(Operator::boxed(v(&[1.0]), v(&[0.0])).is_err());
        assert!(Operator::l1(-1.0).is_err());
        assert!(Operator::scaled(0.0, Operator::Zero).is_err());
    }

    #[test]
    fn tuple_requires_single_valued_forward() {
        let ops = vec![Operator::l1(1.0).unwrap(), Operator::Zero];
        let r = OperatorTuple::new(1, ops, BTreeSet::from([0]));
        assert!(matches!(r, Err(Error::NotSingleValued { index: 0, .. })));
    }

    #[test]
    fn oracle_solves_lasso_in_one_dimension() {
        let ops = vec![
            Operator::boxed(v(&[-10.0]), v(&[10.0])).unwrap(),
            Operator::quadratic(Matrix::identity(1, 1), v(&[-2.0])).unwrap(),
            Operator::l1(1.0).unwrap(),
        ];
        let tuple = OperatorTuple::new(1, ops, BTreeSet::new()).unwrap();
        let sol = zero_of_sum_oracle(&tuple, &OracleOptions::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!(sol.residual <= 1e-7);
    }

    #[test]
    fn oracle_solves_affine_pair() {
        let ops = vec![
            Operator::affine(Matrix::identity(2, 2), v(&[1.0, 0.0])).unwrap(),
            Operator::affine(Matrix::identity(2, 2) * 2.0, v(&[0.0, -3.0])).unwrap(),
        ];
        let tuple = OperatorTuple::new(2, ops, BTreeSet::new()).unwrap();
        let sol = zero_of_sum_oracle(&tuple, &OracleOptions::default()).unwrap();
        assert!((sol.x - v(&[-1.0 / 3.0, 1.0])).norm() < 1e-14);
    }
}
