use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("precision: {0}")]
    Precision(String),
    #[error("half-integer ambiguity: {0} has no unique nearest integer")]
    HalfIntegerAmbiguity(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("degenerate iterate: k={k} has eigenvalue 1")]
    DegenerateIterate { k: u64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parameters too tight: {0}")]
    ParamTooTight(String),
    #[error("empty window: no solution up to {ceiling}")]
    EmptyWindow { ceiling: u64 },
    #[error("empty orbit system")]
    EmptySystem,
    #[error("orbit {orbit}: mean index must be positive")]
    NonpositiveMeanIndex { orbit: usize },
    #[error("orbit {orbit}: action must be positive")]
    NonpositiveAction { orbit: usize },
    #[error("boundary does not square to zero at generator {generator}")]
    BoundaryNotSquareZero { generator: String },
    #[error("filtration violation: {0}")]
    FiltrationViolation(String),
    #[error("malformed complex: {0}")]
    MalformedComplex(String),
    #[error(
        "zeta mismatch at action {action}, degree {degree}: bars give {bars}, orbits give {orbits}"
    )]
    ZetaMismatch {
        action: String,
        degree: i64,
        bars: usize,
        orbits: usize,
    },
    #[error("classification undefined: {0}")]
    ClassificationUndefined(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("rational ratio between orbits {i} and {j}")]
    RationalRatio { i: usize, j: usize },
    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),
    #[error("event mismatch: {0}")]
    EventMismatch(String),
    #[error("non-resonance failed: {0}")]
    NonResonanceFailed(String),
    #[error("factorial of {0} exceeds the supported range")]
    FactorialOverflow(u64),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag used in diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Precision(_) => "precision",
            Error::HalfIntegerAmbiguity(_) => "half-integer-ambiguity",
            Error::DivisionByZero => "division-by-zero",
            Error::Overflow(_) => "overflow",
            Error::InvalidBlock(_) => "invalid-block",
            Error::DegenerateIterate { .. } => "degenerate-iterate",
            Error::InvalidParams(_) => "invalid-params",
            Error::ParamTooTight(_) => "param-too-tight",
            Error::EmptyWindow { .. } => "empty-window",
            Error::EmptySystem => "empty-system",
            Error::NonpositiveMeanIndex { .. } => "nonpositive-mean-index",
            Error::NonpositiveAction { .. } => "nonpositive-action",
            Error::BoundaryNotSquareZero { .. } => "boundary-not-square-zero",
            Error::FiltrationViolation(_) => "filtration-violation",
            Error::MalformedComplex(_) => "malformed-complex",
            Error::ZetaMismatch { .. } => "zeta-mismatch",
            Error::ClassificationUndefined(_) => "classification-undefined",
            Error::NotApplicable(_) => "not-applicable",
            Error::RationalRatio { .. } => "rational-ratio",
            Error::HypothesisViolation(_) => "hypothesis-violation",
            Error::EventMismatch(_) => "event-mismatch",
            Error::NonResonanceFailed(_) => "non-resonance-failed",
            Error::FactorialOverflow(_) => "factorial-overflow",
            Error::Parse(_) => "parse",
        }
    }
}
