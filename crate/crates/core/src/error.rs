use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation: n_max = {0} (need at least 2 levels)")]
    InvalidSpace(usize),

    #[error("coherent amplitude |alpha| = {alpha} leaks {tail:.3e} of its mass beyond n_max = {n_max}")]
    Truncation { alpha: f64, n_max: usize, tail: f64 },

    #[error("cat amplitude must be strictly positive, got {0}")]
    DegenerateAmplitude(f64),

    #[error("shape mismatch: expected {expected}x{expected}, got {rows}x{cols}")]
    ShapeMismatch {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite state encountered at t = {t} (step {step})")]
    NonFinite { t: f64, step: usize },

    #[error("fast block is numerically singular (condition number {0:.3e})")]
    SingularFastBlock(f64),

    #[error("fast block is not Hurwitz: spectral abscissa {0:.3e}")]
    NotHurwitz(f64),

    #[error("expected a {expected}-dimensional left kernel, found {found}")]
    KernelDimensionMismatch { expected: usize, found: usize },

    #[error("conserved functionals are ill-conditioned (condition number {0:.3e})")]
    IllConditionedFunctionals(f64),

    #[error("exponential fit rejected: R^2 = {0:.6}")]
    FitRejected(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("linear algebra failure: {0}")]
    Linalg(#[from] ndarray_linalg::error::LinalgError),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
