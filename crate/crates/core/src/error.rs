use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("user {0} has no engagement with any artist")]
    ZeroRow(usize),
    #[error("negative weight at user {user}, artist {artist}")]
    NegativeWeight { user: usize, artist: usize },
    #[error("non-finite weight at user {user}, artist {artist}")]
    NonFiniteWeight { user: usize, artist: usize },
    #[error("alpha must lie in (0, 1], got {0}")]
    BadAlpha(f64),
    #[error("index {index} out of range for length {len}")]
    Index { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("instance must have at least one user and one artist")]
    EmptyInstance,
    #[error("every artist aggregates to zero, share vector is undefined")]
    DegenerateAggregate,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("manipulated instance is not an extension of the base instance: {0}")]
    NotAnExtension(String),
    #[error("manipulated instance changes no user rows")]
    NoRowsChanged,
    #[error("invalid Sybil split: {0}")]
    BadSplit(String),
    #[error("axiom premise violated: {0}")]
    Premise(String),
    #[error("rule is only defined on {expected} artists, instance has {got}")]
    Domain { expected: usize, got: usize },
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("maximum envy is unbounded: artist {0} has streams but zero payment")]
    DegenerateEnvy(usize),
    #[error("no users remain after filtering")]
    EmptyAfterFilter,
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
