use thiserror::Error;

/// Errors raised by the evaluation, optimization and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("axis sets overlap on `{0}`")]
    OverlappingAxes(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("probabilities do not normalize: {0}")]
    Normalization(String),

    #[error("invalid probability entry: {0}")]
    InvalidProbability(String),

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("wrong channel kind: {0}")]
    ChannelKind(String),

    #[error("invalid distortion table: {0}")]
    Distortion(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("budget exceeded: {what} needs {required:.3e}, limit is {limit:.3e}")]
    Budget {
        what: String,
        required: f64,
        limit: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
