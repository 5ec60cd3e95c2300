use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("range containment violated: residual {residual:e}")]
    RangeContainment { residual: f64 },

    #[error("kernel containment violated: residual {residual:e}")]
    KernelContainment { residual: f64 },

    #[error("index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("primal index {0} may not belong to the forward set")]
    PrimalInForwardSet(usize),

    #[error("forward set must be a strict subset of the operator indices")]
    ForwardSetTooLarge,

    #[error("invalid p-kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid representation: {0}")]
    InvalidRepresentation(String),

    #[error("operator {index} must be single-valued: {kind} is set-valued")]
    NotSingleValued { index: usize, kind: &'static str },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("missing cocoercivity constant for forward operator {0}")]
    MissingBeta(usize),

    #[error("U has rank {rank} < d = {d}; certificate search refused")]
    RankDeficientU { rank: usize, d: usize },

    #[error("consistency check failed: {what} residual {residual:e}")]
    Consistency { what: &'static str, residual: f64 },

    #[error("oracle certificate failed: residual {residual:e}")]
    OracleCertificate { residual: f64 },

    #[error("incompatible problem: {0}")]
    Incompatible(String),

    #[error("unknown method {0:?}")]
    UnknownMethod(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(context: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn param(name: &str, value: f64, reason: &str) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            value,
            reason: reason.to_string(),
        }
    }
}
