use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operands belong to different groups: {left} vs {right}")]
    GroupMismatch { left: String, right: String },

    #[error("element {element} is not a valid element of {group}")]
    ForeignElement { element: String, group: String },

    #[error("integer overflow in group arithmetic")]
    Overflow,

    #[error("ball of radius {radius} exceeds the size limit of {limit} elements")]
    BallTooLarge { radius: usize, limit: usize },

    #[error("cannot parse group descriptor {0:?}")]
    BadDescriptor(String),

    #[error("parse error at position {position} in {input:?}: {message}")]
    Parse {
        input: String,
        position: usize,
        message: String,
    },

    #[error("exponent p = {0} is outside [1, inf]")]
    BadExponent(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("function is undefined at eigenvalue {0}")]
    FunctionUndefined(f64),

    #[error("eigensolver did not converge")]
    NoConvergence,

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("dense simplex lost accuracy (constraint violation {0:e})")]
    LpUnstable(f64),

    #[error("linear program hit its iteration limit after {0} pivots")]
    LpIterationLimit(usize),

    #[error("matrix too large for the dense path ({0} columns)")]
    TooLarge(usize),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
