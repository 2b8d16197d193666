use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not Hermitian: ||A - A*||_F = {residual:.3e} exceeds {bound:.3e}")]
    NotHermitian { residual: f64, bound: f64 },

    #[error("operator is not unitary: ||U*U - I||_F = {residual:.3e} exceeds {bound:.3e}")]
    NotUnitary { residual: f64, bound: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("Fourier profile support [{lo}, {hi}] is not contained in [{min}, {max}]")]
    SupportViolation {
        lo: f64,
        hi: f64,
        min: f64,
        max: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
