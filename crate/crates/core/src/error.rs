use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Weighted resultant of a circular mean is (numerically) zero.
    #[error("degenerate circular mean: resultant vector is zero")]
    DegenerateMean,

    #[error("initialization failed: {0}")]
    Initialization(String),

    #[error("numerical degeneracy: {0}")]
    Numerical(String),

    #[error("scenario has no active speaker")]
    EmptyScenario,

    #[error("snapshot carries no signal energy")]
    NoSignal,

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    /// Malformed record in a text input. `line` is 1-based.
    #[error("line {line}: field `{field}`: {message}")]
    Format {
        line: usize,
        field: String,
        message: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn format(line: usize, field: &str, message: impl Into<String>) -> Self {
        Error::Format {
            line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UndefinedMetric(_) => 3,
            Error::Io(_) => 4,
            _ => 2,
        }
    }
}
