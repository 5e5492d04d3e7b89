use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{what} index {index} out of range 1..={max}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        max: usize,
    },

    #[error("dense realization refused: {num_qubits} qubits exceeds the dense cap of {cap}")]
    DenseCap { num_qubits: usize, cap: usize },

    #[error("operator is not Hermitian (max anti-Hermitian coefficient {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("parameter vector has length {actual}, circuit expects {expected}")]
    ParameterLength { expected: usize, actual: usize },

    #[error("invalid optimizer setting: {0}")]
    InvalidOptimizer(String),

    #[error("objective returned a non-finite value {value} at evaluation {evaluation}")]
    NonFiniteObjective { value: f64, evaluation: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

pub type Result<T> = std::result::Result<T, Error>;
