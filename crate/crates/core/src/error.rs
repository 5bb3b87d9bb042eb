use std::fmt;

/// Errors surfaced by the laboratory's constructions and file formats.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A level would exceed the configured cap.
    LevelOverflow {
        k: u32,
        max: u32,
    },
    /// Two values were expected at the same level.
    LevelMismatch {
        expected: u32,
        got: u32,
    },
    /// A 1-based matrix or vector index fell outside its range.
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },
    /// Vector/matrix sizes disagree.
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
    /// A scalar argument fell outside its admissible range.
    ArgumentOutOfRange {
        what: &'static str,
    },
    /// Matrix file could not be parsed.
    MalformedMatrixFile {
        line: usize,
        message: String,
    },
    /// A requested diagonal cannot be the diagonal of any projection.
    InfeasibleTarget {
        message: String,
    },
    /// A construction finished but failed its own post-checks; this signals a
    /// bug, not a data condition.
    SynthesisFailure {
        message: String,
    },
    /// A ratio report needs at least three chain elements.
    ChainTooShort {
        len: usize,
    },
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::LevelOverflow { k, max } => {
                write!(f, "level {k} exceeds the configured maximum level {max}")
            }
            Error::LevelMismatch { expected, got } => {
                write!(f, "expected a matrix at level {expected}, got level {got}")
            }
            Error::IndexOutOfRange { what, index, limit } => {
                write!(f, "{what} index {index} out of range 1..={limit}")
            }
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::ArgumentOutOfRange { what } => write!(f, "argument out of range: {what}"),
            Error::MalformedMatrixFile { line, message } => {
                write!(f, "malformed matrix file at line {line}: {message}")
            }
            Error::InfeasibleTarget { message } => write!(f, "infeasible target: {message}"),
            Error::SynthesisFailure { message } => write!(f, "synthesis failure: {message}"),
            Error::ChainTooShort { len } => {
                write!(
                    f,
                    "chain of length {len} is too short for a ratio report (need 3)"
                )
            }
            Error::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
