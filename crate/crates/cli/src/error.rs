use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// serde_json messages carry the line, column and offending field.
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] sirb_core::Error),

    #[error("run failed: {0}")]
    Failed(String),
}

impl CliError {
    /// 1 for bad input, 2 for numerical or invariant failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Parse { .. } | CliError::Config(_) => 1,
            CliError::Model(e) if is_config_error(e) => 1,
            _ => 2,
        }
    }
}

fn is_config_error(e: &sirb_core::Error) -> bool {
    use sirb_core::Error as E;
    matches!(
        e,
        E::InvalidParameter { .. }
            | E::InvalidGrid(_)
            | E::GridMismatch { .. }
            | E::CoefficientBounds(_)
            | E::InvalidConfig(_)
            | E::UnknownRegime(_)
            | E::ModeOutOfRange { .. }
    )
}

pub type Result<T> = std::result::Result<T, CliError>;
