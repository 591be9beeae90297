use thiserror::Error;

/// Failures surfaced by the command line, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Oracle(_) => 3,
            CliError::Io(_) => 4,
            CliError::Numeric(_) => 1,
        }
    }

    pub(crate) fn key(key: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Config(format!("{key}: {msg}"))
    }

    pub(crate) fn io(what: impl std::fmt::Display, err: std::io::Error) -> Self {
        CliError::Io(format!("{what}: {err}"))
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
