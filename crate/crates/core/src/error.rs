use thiserror::Error;

/// Errors raised by the laboratory. Every variant maps to one of the
/// failure modes the public operations document.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cutoff: N = {cutoff}, G = {guard} (need N >= 2 and G < N)")]
    InvalidCutoff { cutoff: usize, guard: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("negative occupation: {0}")]
    NegativeOccupation(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("nu = {0} outside [0, 1]")]
    NuOutOfRange(f64),

    #[error("step too large: spectral bound * dt = {0:.3} exceeds the RK4 limit")]
    StepTooLarge(f64),

    #[error("truncation overflow: weight {weight:.3e} in the top {guard} levels")]
    TruncationOverflow { weight: f64, guard: usize },

    #[error("unknown increment symbol `{0}`")]
    UnknownSymbol(String),

    #[error("martingale term is not linear in the increments")]
    NonLinearMartingale,

    #[error("increments `{0}` and `{1}` do not commute; cannot sample classically")]
    NonCommutativeSet(String, String),

    #[error("second-moment matrix is not realizable (min eigenvalue {min_eig:.3e}): {matrix}")]
    NonRealizableMoments { min_eig: f64, matrix: String },

    #[error("unsupported product: {0}")]
    UnsupportedProduct(String),

    #[error("time {0} is not on the grid")]
    OffGrid(f64),

    #[error("grid mismatch between processes")]
    GridMismatch,

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
