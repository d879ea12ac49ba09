use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: header declares {expected} rows but {found} were read", path.display())]
    CountMismatch { path: PathBuf, expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] docalign_core::Error),
}

/// Process exit status for configuration and validation failures.
pub const EXIT_CONFIG: i32 = 2;
/// Process exit status for numeric failures at run time.
pub const EXIT_NUMERIC: i32 = 3;

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io { path: path.to_owned(), source }
    }

    pub fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Error::Parse { path: path.to_owned(), line, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        use docalign_core::Error as C;
        match self {
            Error::Core(
                C::NonFinite(_) | C::NonFiniteGradient(_) | C::ZeroNorm(_) | C::RankDeficient | C::ConstantInput,
            ) => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}
