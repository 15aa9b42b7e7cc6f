use thiserror::Error;

use crate::reconstruction::ReconstructionResult;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unphysical state: Bloch vector norm {norm} exceeds 1")]
    UnphysicalState { norm: f64 },

    #[error("expected a unit vector, got norm {norm}")]
    NonUnitVector { norm: f64 },

    #[error("delay time must be non-negative, got {0}")]
    NegativeDelay(f64),

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid reconstruction input: {0}")]
    InvalidInput(String),

    #[error("measurement axes do not span R^3")]
    NonSpanningBases,

    #[error("solver did not converge within {} iterations", .best.iterations)]
    MaxIterationsExceeded { best: Box<ReconstructionResult> },

    #[error("row {row} is missing the {estimator} reconstruction")]
    MissingEstimator { row: usize, estimator: &'static str },

    #[error("scan has no successful rows")]
    EmptyScan,

    #[error("{}", match .index {
        Some(i) => format!("record {i}: {message}"),
        None => message.clone(),
    })]
    Schema {
        index: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnphysicalState { .. } => "unphysical_state",
            Error::NonUnitVector { .. } => "non_unit_vector",
            Error::NegativeDelay(_) => "negative_delay",
            Error::InvalidNoise(_) => "invalid_noise",
            Error::InvalidConfig(_) => "invalid_config",
            Error::InvalidInput(_) => "invalid_input",
            Error::NonSpanningBases => "non_spanning_bases",
            Error::MaxIterationsExceeded { .. } => "max_iterations_exceeded",
            Error::MissingEstimator { .. } => "missing_estimator",
            Error::EmptyScan => "empty_scan",
            Error::Schema { .. } => "schema",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
