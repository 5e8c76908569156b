use thiserror::Error;

/// Errors surfaced by the numerical core.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: expected d={expected}, got d={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degree mismatch in {context}: expected {expected}, got {got}")]
    DegreeMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not hermitian: defect {defect:.3e} in {context}")]
    NotHermitian { context: &'static str, defect: f64 },

    #[error("ODE step size underflow at t={t} (step {step:.3e})")]
    StepSizeUnderflow { t: f64, step: f64 },

    #[error("quadrature failed to reach tolerance {tol:.3e} (estimate {estimate:.3e})")]
    QuadratureFailure { tol: f64, estimate: f64 },
}
