use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fractional order s = {0} outside (0, 1]")]
    InvalidOrder(f64),

    #[error("non-finite value at node {index} ({context})")]
    NonFinite { index: usize, context: &'static str },

    #[error("field length {found} does not match grid node count {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("spectral symmetry broken: imaginary residue {residue:e} exceeds {bound:e}")]
    Symmetry { residue: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("potential violates V + 1 >= 0 at node {index} (V = {value})")]
    PotentialBelowFloor { index: usize, value: f64 },

    #[error("invalid penalization region: {0}")]
    InvalidRegion(String),

    #[error("potential well condition violated: {0}")]
    WellCondition(String),

    #[error("projection undefined: {0}")]
    Projection(String),

    #[error("solver aborted at iteration {iteration}: {reason}")]
    SolverAbort { iteration: usize, reason: String },

    #[error("inadmissible exponent: {0}")]
    Admissibility(String),

    #[error("malformed field dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
