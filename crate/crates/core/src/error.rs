use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("strip violation: real part {re} outside the admissible strip ({lo}, {hi})")]
    StripViolation { re: f64, lo: f64, hi: f64 },

    #[error("square-root argument {re} + {im}i lies within 1e-8 of the branch cut")]
    BranchCut { re: f64, im: f64 },

    #[error("argument order violated: u = {u} exceeds T = {t}")]
    ArgumentOrder { u: f64, t: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("adaptive quadrature did not converge: error estimate {error:e} above tolerance {tolerance:e} after {intervals} subintervals")]
    Quadrature { error: f64, tolerance: f64, intervals: usize },

    #[error("quadrature dimension {0} exceeds the supported maximum of 3")]
    Dimension(usize),

    #[error("joint density requested on the diagonal t1 = t2 = {0}")]
    Diagonal(f64),

    #[error("index {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("death-date pair (j = {j}, i = {i}) is not admissible for this contract")]
    Inadmissible { j: usize, i: usize },

    #[error("time {t} outside [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("non-finite integrand input")]
    NonFinite,

    #[error("rejection rate {rate:e} exceeds 1e-6 ({rejected} of {drawn} samples non-finite)")]
    RejectionRate { rate: f64, rejected: u64, drawn: u64 },

    #[error("bias report undefined: Monte Carlo value is zero")]
    ZeroDivision,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sensitivity cell ({axis1} = {x}, {axis2} = {y}) failed: {source}")]
    Cell { axis1: String, x: f64, axis2: String, y: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
    }
}
