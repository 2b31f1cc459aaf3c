use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("negative eigenvalue {value:.3e} beyond tolerance")]
    NegativeEigenvalue { value: f64 },

    #[error("invalid density matrix: {}", .violations.join("; "))]
    InvalidDensity { violations: Vec<String> },

    #[error("invalid process specification: {0}")]
    InvalidSpec(String),

    #[error("invalid time {value}: {reason}")]
    InvalidTime { value: f64, reason: &'static str },

    #[error(
        "Jordan defect on peripheral eigenvalue {lambda}: algebraic multiplicity {algebraic}, geometric {geometric}"
    )]
    JordanDefect {
        lambda: String,
        algebraic: usize,
        geometric: usize,
    },

    #[error("dual Gram matrix is singular for eigenvalue {lambda}")]
    SingularDualGram { lambda: String },

    #[error("support mismatch with the T-projector (deviation {deviation:.3e})")]
    SupportMismatch { deviation: f64 },

    #[error("rank deficiency: expected {expected}, found {found}")]
    RankDeficient { expected: usize, found: usize },

    #[error("constraint {0} is not an integral of motion")]
    NotIntegralOfMotion(String),

    #[error("observable is not a constant of motion (residual {residual:.3e})")]
    NotConstantOfMotion { residual: f64 },

    #[error("constraints are linearly dependent on the support subspace")]
    DependentConstraints,

    #[error("expectation value has imaginary part {imag:.3e}")]
    ComplexExpectation { imag: f64 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error("{what} violated (residual {residual:.3e}, tolerance {tolerance:.1e})")]
    IdentityViolation {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}
