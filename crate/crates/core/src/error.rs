use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("parse error at token {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unbalanced brackets at token {0}")]
    UnbalancedBrackets(usize),
    #[error("singular system")]
    SingularSystem,
    #[error("DP spec violation: {0}")]
    SpecViolation(String),
    #[error("instance too large for brute force: {0}")]
    InstanceTooLarge(String),
    #[error("grammar is not canonical: {0}")]
    NonCanonicalGrammar(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
    #[error("parameter overflow: {0}")]
    ParameterOverflow(String),
    #[error("sequence length {len} exceeds limit {max}")]
    LengthExceeded { len: usize, max: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
