use thiserror::Error;

/// Errors produced by the simulator and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("agent index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("fading coefficient {index} must be strictly positive, got {value}")]
    NonPositiveCoefficient { index: usize, value: f64 },

    #[error("receiver {receiver} has no in-neighbors in round {round}")]
    NoInNeighbors { receiver: usize, round: usize },

    #[error("parameter `{name}` must be strictly positive and finite, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("sample offset {offset} outside the interval (0, {dt}]")]
    SampleOffsetOutOfRange { offset: f64, dt: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("at least two agents are required, got {0}")]
    TooFewAgents(usize),

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix entry ({row}, {col}) = {value} is negative")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("product did not converge within {rounds} rounds (row disagreement {disagreement:e})")]
    NotConverged { rounds: usize, disagreement: f64 },

    #[error("invalid config at `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("round {round}: matrix-form step deviates from agent-wise step by {deviation:e}")]
    ShadowMismatch { round: usize, deviation: f64 },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig { field: field.into(), reason: reason.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
