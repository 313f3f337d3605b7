use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Core errors raised while checking or reading input data.
    pub fn data(e: tempart_core::Error) -> Self {
        match e {
            tempart_core::Error::Numerical { .. } => CliError::Numerical(e.to_string()),
            tempart_core::Error::Config(m) => CliError::Config(m),
            other => CliError::Data(other.to_string()),
        }
    }

    /// Core errors raised from user-supplied parameters.
    pub fn config(e: tempart_core::Error) -> Self {
        match e {
            tempart_core::Error::Numerical { .. } => CliError::Numerical(e.to_string()),
            tempart_core::Error::Config(m) => CliError::Config(m),
            other => CliError::Config(other.to_string()),
        }
    }
}
