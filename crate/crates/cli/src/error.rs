use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Library(#[from] levy_limits::Error),

    #[error("tolerance check failed: {0}")]
    Tolerance(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    /// 2 for rejected input, 3 for numerical or tolerance failures, 1 for
    /// I/O.
    pub fn exit_code(&self) -> u8 {
        use levy_limits::Error as E;
        match self {
            Self::Config(_) => 2,
            Self::Library(E::InvalidParameter(_) | E::Domain { .. } | E::Resolution { .. } | E::Horizon { .. }) => 2,
            Self::Library(_) | Self::Tolerance(_) => 3,
            Self::Io { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "validation",
            3 => "numerical",
            _ => "io",
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            error: ErrorBody {
                kind: self.kind(),
                message: self.to_string(),
                exit_code: self.exit_code(),
            },
        }
    }
}

/// Machine-readable form written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: u8,
}
