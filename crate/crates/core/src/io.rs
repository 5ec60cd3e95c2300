//! JSON documents for representations, problems and certificates.
//!
//! Operator indices are 1-based in every document.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::convergence::Certificate;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Tolerance, Vector};
use crate::operators::{Operator, OperatorTuple};
use crate::representation::{self, Representation, RepresentationParts};

type Rows = Vec<Vec<f64>>;

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

fn matrix(rows: &Rows, what: &str) -> Result<Matrix> {
    linalg::from_rows(rows).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn to_zero_based(i: usize, what: &str) -> Result<usize> {
    i.checked_sub(1).ok_or_else(|| Error::Parse(format!("{what}: indices are 1-based, got 0")))
}

fn index_set(f: &[usize]) -> Result<BTreeSet<usize>> {
    f.iter().map(|&i| to_zero_based(i, "F")).collect()
}

fn one_based(set: &BTreeSet<usize>) -> Vec<usize> {
    set.iter().map(|i| i + 1).collect()
}

/// `{ p, F, M, N, U, V }`, or the kernel form `{ p, F, M }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationDoc {
    pub p: usize,
    #[serde(rename = "F", default)]
    pub forward: Vec<usize>,
    #[serde(rename = "M")]
    pub m: Rows,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Rows>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Rows>,
    #[serde(rename = "V", default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Rows>,
}

impl RepresentationDoc {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(parse_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("representation serializes")
    }

    pub fn from_representation(rep: &Representation) -> Self {
        RepresentationDoc {
            p: rep.p() + 1,
            forward: one_based(rep.forward_set()),
            m: linalg::to_rows(rep.m()),
            n: Some(linalg::to_rows(rep.n())),
            u: Some(linalg::to_rows(rep.u())),
            v: Some(linalg::to_rows(rep.v())),
        }
    }

    /// The kernel form of `M`.
    pub fn kernel(m: &Matrix, p: usize, forward: &BTreeSet<usize>) -> Self {
        RepresentationDoc { p: p + 1, forward: one_based(forward), m: linalg::to_rows(m), n: None, u: None, v: None }
    }

    pub fn is_kernel_form(&self) -> bool {
        self.n.is_none() && self.u.is_none() && self.v.is_none()
    }

    /// The parts of a full document, unvalidated. Kernel documents are
    /// expanded with [`representation::from_kernel`], which validates.
    pub fn to_parts(&self, tol: &Tolerance) -> Result<RepresentationParts> {
        let p = to_zero_based(self.p, "p")?;
        let forward = index_set(&self.forward)?;
        let m = matrix(&self.m, "M")?;
        match (&self.n, &self.u, &self.v) {
            (None, None, None) => Ok(representation::from_kernel(&m, p, &forward, tol)?.parts().clone()),
            (Some(n), Some(u), Some(v)) => Ok(RepresentationParts { p, forward, m, n: matrix(n, "N")?, u: matrix(u, "U")?, v: matrix(v, "V")? }),
            _ => Err(Error::Parse("N, U and V must be given together".into())),
        }
    }

    pub fn to_representation(&self, tol: &Tolerance) -> Result<Representation> {
        Representation::new(self.to_parts(tol)?, tol)
    }
}

/// One operator, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum OperatorDoc {
    Zero,
    Affine {
        #[serde(rename = "K")]
        k: Rows,
        b: Vec<f64>,
    },
    Quadratic {
        #[serde(rename = "P")]
        p: Rows,
        q: Vec<f64>,
    },
    Skew {
        #[serde(rename = "K")]
        k: Rows,
    },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    L1 { mu: f64 },
    Scaled { lambda: f64, inner: Box<OperatorDoc> },
}

impl OperatorDoc {
    pub fn to_operator(&self) -> Result<Operator> {
        let vec = |v: &[f64]| Vector::from_column_slice(v);
        match self {
            OperatorDoc::Zero => Ok(Operator::Zero),
            OperatorDoc::Affine { k, b } => Operator::affine(matrix(k, "K")?, vec(b)),
            OperatorDoc::Quadratic { p, q } => Operator::quadratic(matrix(p, "P")?, vec(q)),
            OperatorDoc::Skew { k } => Operator::skew(matrix(k, "K")?),
            OperatorDoc::Box { lo, hi } => Operator::boxed(vec(lo), vec(hi)),
            OperatorDoc::L1 { mu } => Operator::l1(*mu),
            OperatorDoc::Scaled { lambda, inner } => Operator::scaled(*lambda, inner.to_operator()?),
        }
    }

    /// `None` for custom operators.
    pub fn from_operator(op: &Operator) -> Option<Self> {
        let v = |x: &Vector| x.as_slice().to_vec();
        Some(match op {
            Operator::Zero => OperatorDoc::Zero,
            Operator::AffineMonotone { k, b } => OperatorDoc::Affine { k: linalg::to_rows(k), b: v(b) },
            Operator::QuadraticGradient { p, q } => OperatorDoc::Quadratic { p: linalg::to_rows(p), q: v(q) },
            Operator::SkewLinear { k } => OperatorDoc::Skew { k: linalg::to_rows(k) },
            Operator::BoxNormalCone { lo, hi } => OperatorDoc::Box { lo: v(lo), hi: v(hi) },
            Operator::L1Subdifferential { mu } => OperatorDoc::L1 { mu: *mu },
            Operator::Scaled { lambda, inner } => OperatorDoc::Scaled { lambda: *lambda, inner: Box::new(Self::from_operator(inner)?) },
            Operator::Custom(_) => return None,
        })
    }
}

/// `{ m, operators, F, betas }`; `betas` is keyed by 1-based index and
/// computed from the operators when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDoc {
    pub m: usize,
    pub operators: Vec<OperatorDoc>,
    #[serde(rename = "F", default)]
    pub forward: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub betas: Option<BTreeMap<String, f64>>,
}

impl ProblemDoc {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(parse_err)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem serializes")
    }

    /// `None` if the tuple contains custom operators.
    pub fn from_tuple(tuple: &OperatorTuple) -> Option<Self> {
        let operators = tuple.operators().iter().map(OperatorDoc::from_operator).collect::<Option<Vec<_>>>()?;
        let betas = (!tuple.betas().is_empty()).then(|| tuple.betas().iter().map(|(i, b)| ((i + 1).to_string(), *b)).collect());
        Some(ProblemDoc { m: tuple.m(), operators, forward: one_based(tuple.forward_set()), betas })
    }

    pub fn to_tuple(&self) -> Result<OperatorTuple> {
        let ops = self.operators.iter().map(OperatorDoc::to_operator).collect::<Result<Vec<_>>>()?;
        let tuple = OperatorTuple::new(self.m, ops, index_set(&self.forward)?)?;
        match &self.betas {
            None => tuple.with_computed_betas(),
            Some(b) => {
                let mut betas = BTreeMap::new();
                for (k, &v) in b {
                    let i: usize = k.parse().map_err(|_| Error::Parse(format!("betas: key {k:?} is not an index")))?;
                    betas.insert(to_zero_based(i, "betas")?, v);
                }
                tuple.with_betas(betas)
            }
        }
    }
}

/// A serialized certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDoc {
    #[serde(rename = "Q")]
    pub q: Rows,
    #[serde(rename = "W")]
    pub w: Rows,
    pub structural_residual: f64,
    #[serde(rename = "min_eig_Q")]
    pub min_eig_q: f64,
    #[serde(rename = "min_eig_W")]
    pub min_eig_w: f64,
    pub satisfied: bool,
    pub seed: Option<u64>,
}

impl From<&Certificate> for CertificateDoc {
    fn from(c: &Certificate) -> Self {
        CertificateDoc {
            q: linalg::to_rows(&c.q),
            w: linalg::to_rows(&c.w),
            structural_residual: c.structural_residual,
            min_eig_q: c.min_eig_q,
            min_eig_w: c.min_eig_w,
            satisfied: c.satisfied,
            seed: c.seed,
        }
    }
}

impl CertificateDoc {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

/// Reads a matrix given as `[[...], ...]`, or as `{ "Q": [[...]] }`.
pub fn matrix_from_json(s: &str) -> Result<Matrix> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Doc {
        Rows(Rows),
        Wrapped {
            #[serde(rename = "Q")]
            q: Rows,
        },
    }
    match serde_json::from_str(s).map_err(parse_err)? {
        Doc::Rows(r) | Doc::Wrapped { q: r } => matrix(&r, "Q"),
    }
}
