use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("empty expression")]
    Empty,
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("malformed number '{0}'")]
    BadNumber(String),
    #[error("unexpected token '{0}'")]
    UnexpectedToken(String),
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("constant '{0}' must be finite")]
    NonFiniteConstant(String),
}

/// Syntax error with the byte offset at which it was detected.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalErrorKind {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of a non-positive number")]
    LogDomain,
    #[error("square root of a negative number")]
    SqrtDomain,
    #[error("non-integer power of a non-positive base")]
    PowDomain,
    #[error("non-finite result")]
    NonFinite,
}

/// Failure to evaluate a function of the substrate at a given point.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("{kind} at S = {s}")]
pub struct EvalError {
    pub s: f64,
    pub kind: EvalErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid species '{label}': {reason}")]
    InvalidSpecies { label: String, reason: String },
    #[error("model has no species")]
    EmptyModel,
    #[error("operation requires a normalized model (D = 1, S0 = 1)")]
    NotNormalized,
    #[error("{0} is outside the admissible domain")]
    Domain(String),
    #[error("no interior equilibrium: break-even concentration {lambda} >= 1")]
    NoEquilibrium { lambda: f64 },
    #[error("step size underflow at t = {t}: the problem looks stiff")]
    Stiff { t: f64, state: Vec<f64> },
    #[error("trajectory did not return to the section before t = {t_max}")]
    NoReturn { t_max: f64 },
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("malformed model file: {0}")]
    ModelFile(String),
}
