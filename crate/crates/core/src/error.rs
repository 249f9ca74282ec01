use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A structured input line could not be decoded.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Taxonomy, lexicon or IC files are inconsistent.
    #[error("load error: {0}")]
    Load(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("transport error: {0}")]
    Transport(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::InvalidArgument(_)
            | Error::Load(_) => 2,
            Error::Io(_) | Error::Transport(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
