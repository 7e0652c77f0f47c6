use std::path::{Path, PathBuf};

use ntd_core::NtdError;

/// Everything a command can fail with. Each variant maps to a stable exit
/// code, see [`CliError::exit_code`].
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Argument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] NtdError),

    #[error("{0}")]
    Usage(#[from] clap::Error),
}

impl CliError {
    pub const EXIT_ARGUMENT: i32 = 2;
    pub const EXIT_PARSE: i32 = 3;
    pub const EXIT_NUMERICAL: i32 = 4;

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Argument(_) => Self::EXIT_ARGUMENT,
            CliError::Parse { .. } | CliError::Io { .. } => Self::EXIT_PARSE,
            CliError::Core(NtdError::InvalidArgument(_)) => Self::EXIT_ARGUMENT,
            CliError::Core(NtdError::NumericalDomain { .. }) => Self::EXIT_NUMERICAL,
            CliError::Usage(e) => e.exit_code(),
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
