use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("variable index {index} out of range for {nvars} variables")]
    IndexOutOfRange { index: usize, nvars: usize },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    /// No homogeneous cofactors of negative degree exist.
    #[error("ideal power k = {k} is below m_ell - 1 = {min_k}")]
    DegreeMismatch { k: u32, min_k: u32 },

    #[error("monomial {monomial:?} is not in the gradient ideal (residual {residual:.3e})")]
    NotInIdeal { monomial: Vec<u32>, residual: f64 },

    #[error("invalid perturbation: {0}")]
    InvalidPerturbation(String),

    #[error("bound factor must be positive: {0}")]
    NonPositive(String),

    #[error("deformed system still has a multiple root near {point:?}")]
    SplitFailed { point: Vec<f64> },

    #[error("Jacobian is rank deficient at {point:?}")]
    RankDeficient { point: Vec<f64> },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
