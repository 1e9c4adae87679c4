use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("row {row} is zero and cannot be normalized")]
    DegenerateRow { row: usize },

    #[error("column {column} is zero and cannot be normalized")]
    DegenerateColumn { column: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("relaxation {value} at step {k} lies outside the {domain} domain")]
    ScheduleDomain {
        k: usize,
        value: f64,
        domain: &'static str,
    },

    /// A unitary constructor received a parameter for which the matrix is not real.
    #[error("{parameter} = {value} is outside [0, 1]; sqrt(2p(1-p)) is not real")]
    Domain { parameter: &'static str, value: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("state at step {k} needs {required} bytes, above the {limit}-byte memory limit")]
    Resource {
        k: usize,
        required: u128,
        limit: u128,
    },

    #[error("state norm drifted to {norm} after {operation}")]
    NormDrift { operation: String, norm: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
