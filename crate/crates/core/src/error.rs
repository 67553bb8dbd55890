use thiserror::Error;

/// Every failure the library reports. Variants mirror the error kinds each
/// operation documents; report-carrying operations never use them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("class `{0}` is referenced but never declared")]
    DanglingClass(String),
    #[error("bad multiplicity `{0}` (expected \"one\" or \"omega\")")]
    BadMultiplicity(String),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("size budget exceeded: {what} needs {needed}, cap is {cap}")]
    SizeBudgetExceeded {
        what: String,
        needed: usize,
        cap: usize,
    },
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("invalid weight: {0}")]
    InvalidWeight(String),
    #[error("premise violated: {reason} (witness: {witness})")]
    PremiseViolated { reason: String, witness: String },
    #[error("unsupported presentation: {0}")]
    UnsupportedPresentation(String),
    #[error("shape violation at node {node}: {reason}")]
    ShapeViolation { node: usize, reason: String },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("fixed-point iteration is not contracting (residual ratios {0:?})")]
    NonContraction(Vec<f64>),
    #[error("iteration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("illegal move in round {round}: {reason}")]
    IllegalMove { round: usize, reason: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
