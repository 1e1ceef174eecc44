//! Error taxonomy shared by every module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SdError>;

#[derive(Debug, Error)]
pub enum SdError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("field must be real-valued (max |Im| = {max_imag:.3e})")]
    NotRealValued { max_imag: f64 },

    #[error("blow-up detected at t = {t:.6}: ||u||_2 = {l2:.6e}, ||u||_inf = {linf:.6e}")]
    BlowUp { t: f64, l2: f64, linf: f64 },

    #[error("fixed-point iteration is not contracting; last ratios {ratios:?}")]
    NoContraction { ratios: Vec<f64> },

    #[error("fixed-point iteration did not reach tolerance within {kmax} iterations (last diff {last_diff:.3e})")]
    NotConverged { kmax: usize, last_diff: f64 },

    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("integer {0} could not be factored within budget")]
    Unfactored(u64),

    #[error("configuration invalid:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("malformed data: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SdError {
    /// Process exit code for the CLI; numeric aborts get distinct codes.
    pub fn exit_code(&self) -> i32 {
        match self {
            SdError::Config(_) | SdError::InvalidParameter(_) | SdError::InvalidGrid(_) => 2,
            SdError::BlowUp { .. } => 3,
            SdError::NoContraction { .. } | SdError::NotConverged { .. } => 4,
            SdError::BudgetExceeded(_) | SdError::Unfactored(_) => 5,
            _ => 1,
        }
    }
}
