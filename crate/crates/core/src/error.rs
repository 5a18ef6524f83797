use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("function is not admissible (boundary flag unset)")]
    NotAdmissible,

    #[error("profile is not nonincreasing (first increase after node {node})")]
    NotMonotone { node: usize },

    #[error("negative sample {value} at node {node}")]
    NegativeSample { node: usize, value: f64 },

    #[error("non-finite sample at node {0}")]
    NonFinite(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular linear system (zero pivot in column {0})")]
    Singular(usize),

    #[error("shooting failed: {0}")]
    Shooting(String),

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
