use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GtdError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("parse error at byte {offset}: expected one of {}", expected.join(", "))]
    Parse {
        offset: usize,
        expected: Vec<String>,
    },

    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },

    #[error("singular change of representation: |I_{index}| = {magnitude:e} is below tolerance")]
    SingularRepresentation { index: usize, magnitude: f64 },

    #[error("map is not a contactomorphism at this point (proportionality residual {residual:e})")]
    NotAContactomorphism { residual: f64 },

    #[error("degenerate metric: |det g| = {det:e} at or below threshold {threshold:e}")]
    DegenerateMetric { det: f64, threshold: f64 },

    #[error("curvature backends disagree: jets {jets}, finite differences {finite_diff}")]
    BackendDisagreement { jets: f64, finite_diff: f64 },

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid metric definition: {0}")]
    InvalidSpec(String),

    #[error("degenerate fundamental relation: {0}")]
    DegenerateRelation(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),

    #[error("jet truncation order {have} is below the required order {need}")]
    InsufficientOrder { have: u8, need: u8 },
}

pub type Result<T> = std::result::Result<T, GtdError>;

impl GtdError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        GtdError::Domain(msg.into())
    }
}
