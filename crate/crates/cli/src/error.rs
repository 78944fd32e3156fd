use thiserror::Error;

use polymerlab_core::Error as CoreError;

/// Driver errors. Each one has a stable category and exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),

    #[error("version mismatch: {0}")]
    VersionMismatch(String),

    #[error("drift: {0}")]
    Drift(String),

    #[error("different config: {0}")]
    DifferentConfig(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.category(),
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::VersionMismatch(_) => "version-mismatch",
            CliError::Drift(_) => "drift",
            CliError::DifferentConfig(_) => "different-config",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(CoreError::InvalidParameter(_)) => 3,
            CliError::Core(CoreError::Domain(_)) => 4,
            CliError::Core(CoreError::Capacity(_)) => 5,
            CliError::Core(CoreError::InvalidEndpoint(_)) => 6,
            CliError::Core(CoreError::IncompleteInput(_)) => 7,
            CliError::Config(_) => 8,
            CliError::Io(_) => 9,
            CliError::VersionMismatch(_) => 10,
            CliError::Drift(_) => 11,
            CliError::DifferentConfig(_) => 12,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

/// Exit code used when a command panics; this indicates a bug.
pub const INTERNAL_EXIT: i32 = 70;
