use std::path::PathBuf;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}", format_config_errors(.origin, .errors))]
    Config { origin: String, errors: Vec<String> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] isokin_core::Error),

    #[error("{0}")]
    Internal(String),
}

fn format_config_errors(origin: &str, errors: &[String]) -> String {
    let mut s = format!("invalid configuration {origin}:");
    for e in errors {
        s.push_str("\n  ");
        s.push_str(e);
    }
    s
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => EXIT_USAGE,
            CliError::Core(isokin_core::Error::Config(_)) => EXIT_USAGE,
            _ => EXIT_INTERNAL,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
