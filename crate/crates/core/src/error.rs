use thiserror::Error;

use crate::ParticleClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("port {port} is out of range 1..={modes}")]
    PortOutOfRange { port: usize, modes: usize },

    #[error("input port {0} appears more than once")]
    DuplicateInput(usize),

    #[error("output port {0} appears more than once")]
    RepeatedOutput(usize),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not unitary: max |U^dag U - 1| = {residual:e} exceeds {tol:e}")]
    NotUnitary { residual: f64, tol: f64 },

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("particle class {class} is not supported by {operation}")]
    UnsupportedClass {
        class: ParticleClass,
        operation: &'static str,
    },

    #[error("invalid Gram matrix: {0}")]
    InvalidGram(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("input state is not symmetric under the permutation; the suppression law does not apply")]
    AsymmetricInput,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical consistency check failed: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of an internal numerical check, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
