use thiserror::Error;

/// Errors raised by the model, grid, integrator and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{quantity} must be nonnegative, got {value}")]
    NegativeInput { quantity: &'static str, value: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected {expected} cells, got {found}")]
    GridMismatch { expected: usize, found: usize },

    #[error("diffusion coefficient out of bounds: {0}")]
    CoefficientBounds(String),

    #[error("mode {index} out of range ({reason})")]
    ModeOutOfRange { index: usize, reason: String },

    #[error("unknown regime `{0}` (expected H23, Cor21, H51 or Thm22-candidate)")]
    UnknownRegime(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    CgNonConvergence { iterations: usize, residual: f64 },

    #[error("positivity violated for {species} at cell {cell}: value {value:e} below tolerance {tolerance:e}; dt is likely too large")]
    Positivity {
        species: &'static str,
        cell: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("non-finite value for {species} at cell {cell}")]
    NonFiniteState { species: &'static str, cell: usize },

    #[error("at t = {time}: {source}")]
    AtTime {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("steady state residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("bisection bracket failure on branch {branch}: {detail}")]
    BracketFailure { branch: &'static str, detail: String },

    #[error("classifier precondition violated: p = {0} must be positive")]
    NonPositiveTrace(f64),

    #[error("internal consistency failure: {0}")]
    InternalConsistency(String),
}

impl Error {
    pub(crate) fn at(self, time: f64) -> Error {
        match self {
            e @ Error::AtTime { .. } => e,
            other => Error::AtTime {
                time,
                source: Box::new(other),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
