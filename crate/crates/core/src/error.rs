use thiserror::Error;

/// Errors raised by the numerical layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("incompatible events: cannot combine {left} with {right}")]
    IncompatibleEvents { left: &'static str, right: &'static str },

    #[error("conditioning event has probability {probability:e}, at or below the threshold {threshold:e}")]
    ZeroConditionEvent { probability: f64, threshold: f64 },

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("event {event} cannot be applied to {basis}")]
    UnsupportedEvent { event: &'static str, basis: &'static str },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid has {n} points, at least {min} are required")]
    GridTooSmall { n: usize, min: usize },

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("observable is not finite at grid point ({x}, {y})")]
    NonFiniteObservable { x: f64, y: f64 },

    #[error("matrix is not Hermitian: max |H - H^dagger| = {deviation:e}")]
    NonHermitian { deviation: f64 },

    #[error("eigendecomposition failed to converge")]
    EigenDecompositionFailure,

    #[error("matrix dimension {n} exceeds the dense limit {max}")]
    MatrixTooLarge { n: usize, max: usize },

    #[error("wavefunction amplitude at x = {x} is {amplitude:e}, too small to condition on")]
    ZeroAmplitudeAtX { x: f64, amplitude: f64 },

    #[error("Fock space enumeration needs {count} occupation vectors, limit is {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
