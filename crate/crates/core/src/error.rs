use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {constraint}")]
    InvalidParameter {
        field: &'static str,
        constraint: String,
    },

    #[error("{function} is undefined at r = {value}: {reason}")]
    Domain {
        function: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("nonpositive value {value} at cell {cell} where a positive field is required")]
    Singularity { cell: usize, value: f64 },

    #[error("shape mismatch: expected {expected} values, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("non-finite value at cell {cell}")]
    NonFinite { cell: usize },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("degenerate elliptic solve did not converge along the floor ladder: {0}")]
    DegenerateSolve(String),

    #[error("time step failed at t = {t} with dt = {dt} (dt_min reached): {reason}")]
    StepFailure { t: f64, dt: f64, reason: String },

    #[error("quadrature did not reach tolerance on [{a}, {b}] (estimate {estimate}, error {error})")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        error: f64,
    },

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed checkpoint or snapshot: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
