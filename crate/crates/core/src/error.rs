use std::fmt;

/// Location and description of a malformed input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    /// One-based line number for text formats.
    pub line: Option<usize>,
    /// One-based field index within the line.
    pub column: Option<usize>,
    pub message: String,
}

impl FormatError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            line: None,
            column: None,
            message: message.into(),
        }
    }

    pub fn at_line(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            column: None,
            message: message.into(),
        }
    }

    pub fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            column: Some(column),
            message: message.into(),
        }
    }
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("format error: {0}")]
    Format(FormatError),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("no activity detected: variance profile is identically zero")]
    NoActivity,

    #[error("segmentation failed: best p = {best_p:.4}, normalized length t = {best_t:.4}")]
    SegmentationFailed { best_p: f64, best_t: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{id}: {source}")]
    Recording { id: String, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidValue(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Attach the id of the recording being processed.
    pub fn in_recording(self, id: impl Into<String>) -> Self {
        Error::Recording {
            id: id.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with recording provenance stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Recording { source, .. } => source.root(),
            other => other,
        }
    }

    /// Whether the root cause is a numerical failure (as opposed to bad data).
    pub fn is_numerical(&self) -> bool {
        matches!(self.root(), Error::Numerical(_))
    }
}

impl From<FormatError> for Error {
    fn from(e: FormatError) -> Self {
        Error::Format(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
