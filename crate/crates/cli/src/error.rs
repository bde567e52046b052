use std::path::PathBuf;

use thiserror::Error;
use vaet_core::VaetError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(VaetError),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 success, 2 config, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<VaetError> for CliError {
    fn from(e: VaetError) -> Self {
        match e {
            VaetError::InvalidParameter { .. }
            | VaetError::DimensionTooLarge { .. }
            | VaetError::TimeGrid(_)
            | VaetError::NotSymmetric(_)
            | VaetError::Pathway(_) => CliError::Config(e.to_string()),
            VaetError::ScanPoint { ref source, .. } if matches!(**source, VaetError::InvalidParameter { .. }) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numeric(e),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
