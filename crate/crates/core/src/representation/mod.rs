//! Frugal resolvent splittings `(p, M, N, U, V)` and their factorizations.
//!
//! A representation encodes the fixed-point map
//! `T z = z - U z + V y` with `y = (M + Φ_{A,p})^{-1} N z`.
//! All operator indices are 0-based.

mod kernel;
mod schedule;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerance};

pub use kernel::{
    from_kernel, from_kernel_with, gamma_matrix, is_p_kernel, minimal_kernel, minimal_lifting, KernelCheck,
    KernelViolation,
};
pub use schedule::{dependency_stages, step_sizes};
pub(crate) use schedule::dependencies as schedule_dependencies;

/// Unvalidated representation data, e.g. straight from a file.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationParts {
    pub p: usize,
    pub forward: BTreeSet<usize>,
    pub m: Matrix,
    pub n: Matrix,
    pub u: Matrix,
    pub v: Matrix,
}

/// Outcome of [`validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub kernel: Option<KernelCheck>,
    /// `ker [N -M] ⊇ ker [U -V]`.
    pub kernel_containment: bool,
    /// `ran U ⊇ ran V`.
    pub range_containment: bool,
    pub reasons: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.reasons.is_empty()
    }
}

fn hstack(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn check_dims(parts: &RepresentationParts) -> Result<()> {
    let n = parts.m.nrows();
    let d = parts.u.nrows();
    let expect = |ctx: &'static str, got: &Matrix, r: usize, c: usize| {
        if got.nrows() != r || got.ncols() != c {
            Err(Error::dims(ctx, format!("{r}x{c}"), format!("{}x{}", got.nrows(), got.ncols())))
        } else {
            Ok(())
        }
    };
    if n == 0 || d == 0 {
        return Err(Error::dims("representation", "n >= 1 and d >= 1", format!("n={n}, d={d}")));
    }
    expect("M", &parts.m, n, n)?;
    expect("N", &parts.n, n, d)?;
    expect("U", &parts.u, d, d)?;
    expect("V", &parts.v, d, n)?;
    for (what, mat) in [("M", &parts.m), ("N", &parts.n), ("U", &parts.u), ("V", &parts.v)] {
        linalg::ensure_finite(mat, what)?;
    }
    if parts.p >= n {
        return Err(Error::IndexOutOfRange { index: parts.p, n });
    }
    if let Some(&i) = parts.forward.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    Ok(())
}

/// Checks the three defining conditions of a representation. Dimension and
/// finiteness problems are returned as errors; failed conditions are listed in
/// the report.
pub fn validate(parts: &RepresentationParts, tol: &Tolerance) -> Result<ValidationReport> {
    check_dims(parts)?;
    let mut reasons = Vec::new();
    let kernel = match is_p_kernel(&parts.m, parts.p, &parts.forward, tol) {
        Ok(check) => {
            reasons.extend(check.violations.iter().map(|v| v.to_string()));
            Some(check)
        }
        Err(e) => {
            reasons.push(e.to_string());
            None
        }
    };
    let nm = hstack(&parts.n, &-&parts.m);
    let uv = hstack(&parts.u, &-&parts.v);
    let kernel_containment = linalg::subset_kernel(&nm, &uv, tol)?;
    if !kernel_containment {
        reasons.push("ker [N -M] does not contain ker [U -V]".to_string());
    }
    let range_containment = linalg::subset_range(&parts.v, &parts.u, tol)?;
    if !range_containment {
        reasons.push("ran U does not contain ran V".to_string());
    }
    Ok(ValidationReport { kernel, kernel_containment, range_containment, reasons })
}

/// A validated representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Representation {
    parts: RepresentationParts,
}

impl Representation {
    pub fn new(parts: RepresentationParts, tol: &Tolerance) -> Result<Self> {
        let report = validate(&parts, tol)?;
        if !report.is_valid() {
            return Err(Error::InvalidRepresentation(report.reasons.join("; ")));
        }
        Ok(Representation { parts })
    }

    /// Primal index.
    pub fn p(&self) -> usize {
        self.parts.p
    }

    pub fn forward_set(&self) -> &BTreeSet<usize> {
        &self.parts.forward
    }

    /// Number of operators.
    pub fn num_operators(&self) -> usize {
        self.parts.m.nrows()
    }

    /// Lifting number.
    pub fn lifting(&self) -> usize {
        self.parts.u.nrows()
    }

    pub fn m(&self) -> &Matrix {
        &self.parts.m
    }

    pub fn n(&self) -> &Matrix {
        &self.parts.n
    }

    pub fn u(&self) -> &Matrix {
        &self.parts.u
    }

    pub fn v(&self) -> &Matrix {
        &self.parts.v
    }

    /// `L = M + Γ_p`, lower triangular.
    pub fn lower(&self) -> Matrix {
        &self.parts.m + gamma_matrix(self.parts.p, self.num_operators())
    }

    pub fn parts(&self) -> &RepresentationParts {
        &self.parts
    }

    /// Largest entrywise difference to another representation of the same shape.
    pub fn max_abs_diff(&self, other: &Representation) -> f64 {
        let a = &self.parts;
        let b = &other.parts;
        if a.p != b.p || a.forward != b.forward || a.u.shape() != b.u.shape() || a.m.shape() != b.m.shape() {
            return f64::INFINITY;
        }
        [(&a.m, &b.m), (&a.n, &b.n), (&a.u, &b.u), (&a.v, &b.v)]
            .iter()
            .map(|(x, y)| (*x - *y).amax())
            .fold(0.0, f64::max)
    }
}

/// `M = S U P`, `N = S U`, `V = U P` with minimum-norm factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredRepresentation {
    pub p: usize,
    pub forward: BTreeSet<usize>,
    pub s: Matrix,
    pub u: Matrix,
    pub pp: Matrix,
}

impl FactoredRepresentation {
    pub fn num_operators(&self) -> usize {
        self.s.nrows()
    }

    pub fn lifting(&self) -> usize {
        self.u.nrows()
    }

    pub fn max_abs_diff(&self, other: &FactoredRepresentation) -> f64 {
        if self.p != other.p || self.forward != other.forward || self.s.shape() != other.s.shape() || self.u.shape() != other.u.shape() {
            return f64::INFINITY;
        }
        [(&self.s, &other.s), (&self.u, &other.u), (&self.pp, &other.pp)]
            .iter()
            .map(|(x, y)| (*x - *y).amax())
            .fold(0.0, f64::max)
    }
}

/// Factors `V = U P` and `N = S U` and checks `M = S U P`.
pub fn factorize(rep: &Representation, tol: &Tolerance) -> Result<FactoredRepresentation> {
    let pp = linalg::right_factor(rep.v(), rep.u(), tol)?;
    let s = linalg::left_factor(rep.n(), rep.u(), tol)?;
    let residual = (rep.m() - &s * rep.u() * &pp).norm();
    if residual > tol.residual_tol {
        return Err(Error::Consistency { what: "M - S U P", residual });
    }
    Ok(FactoredRepresentation { p: rep.p(), forward: rep.forward_set().clone(), s, u: rep.u().clone(), pp })
}

/// Builds `(p, S U P, S U, U, U P)` and validates it.
pub fn compose(
    p: usize,
    forward: &BTreeSet<usize>,
    s: &Matrix,
    u: &Matrix,
    pp: &Matrix,
    tol: &Tolerance,
) -> Result<Representation> {
    if s.ncols() != u.nrows() || u.ncols() != pp.nrows() || !u.is_square() || s.nrows() != pp.ncols() {
        return Err(Error::dims(
            "compose",
            "S: n x d, U: d x d, P: d x n",
            format!("S {:?}, U {:?}, P {:?}", s.shape(), u.shape(), pp.shape()),
        ));
    }
    let su = s * u;
    let parts = RepresentationParts {
        p,
        forward: forward.clone(),
        m: &su * pp,
        n: su,
        u: u.clone(),
        v: u * pp,
    };
    Representation::new(parts, tol)
}

impl FactoredRepresentation {
    pub fn compose(&self, tol: &Tolerance) -> Result<Representation> {
        compose(self.p, &self.forward, &self.s, &self.u, &self.pp, tol)
    }
}
