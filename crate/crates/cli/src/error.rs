use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("matrix file {path}: {reason}")]
    Matrix { path: PathBuf, reason: String },

    #[error("unknown preset `{0}` (available: hexagon6)")]
    UnknownPreset(String),

    #[error(transparent)]
    Simulation(#[from] wmac_formation::Error),

    #[error("serialization: {0}")]
    Serialize(String),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Configuration problems get their own exit status.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            CliError::Config(_)
                | CliError::UnknownPreset(_)
                | CliError::Matrix { .. }
                | CliError::Simulation(wmac_formation::Error::InvalidConfig { .. })
        )
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
