use std::path::PathBuf;

/// Process exit codes of the command-line tool.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INVALID_INPUT: u8 = 1;
    pub const IO: u8 = 2;
    pub const ACCEPTANCE: u8 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Core(#[from] iqtomo_core::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("acceptance checks failed: {}", .0.join(", "))]
    Acceptance(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Io { .. } => exit::IO,
            Error::Acceptance(_) => exit::ACCEPTANCE,
            Error::Parse { .. } | Error::Core(_) | Error::Invalid(_) => exit::INVALID_INPUT,
        }
    }
}
