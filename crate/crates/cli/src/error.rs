use std::path::PathBuf;

use grid_entropy_core::Error as CoreError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("config file {path}, line {line}: {message}")]
    Line {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn field(field: &str, message: impl std::fmt::Display) -> Self {
        CliError::Field {
            field: field.to_string(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Field { .. } | CliError::Line { .. } | CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(CoreError::BudgetExceeded { .. }) => EXIT_BUDGET,
            CliError::Core(_) => EXIT_CONFIG,
            CliError::Io { .. } | CliError::Format { .. } => EXIT_IO,
            CliError::Verify(_) => EXIT_VERIFY,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
