use gtd::GtdError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0}")]
    Hypothesis(String),

    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Hypothesis(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<GtdError> for CliError {
    fn from(err: GtdError) -> Self {
        match err {
            GtdError::HypothesisNotMet(_) => CliError::Hypothesis(err.to_string()),
            GtdError::IndexOutOfRange { .. }
            | GtdError::DimensionMismatch { .. }
            | GtdError::Parse { .. }
            | GtdError::UnknownVariable { .. }
            | GtdError::InvalidGrid(_)
            | GtdError::InvalidSpec(_)
            | GtdError::DegenerateRelation(_) => CliError::Config(err.to_string()),
            _ => CliError::Numerical(err.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
