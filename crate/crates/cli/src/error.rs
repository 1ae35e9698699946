use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{origin}:{line}: {msg}")]
    Config { origin: String, line: usize, msg: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] stockcast::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// 1 for I/O, 2 for anything wrong with the inputs.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Core(stockcast::Error::Io(_)) => 1,
            _ => 2,
        }
    }
}
