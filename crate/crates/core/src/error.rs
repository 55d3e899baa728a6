use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("eigensolver failed to converge on a {dim}x{dim} matrix")]
    ConvergenceFailure { dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: entries ({row}, {col}) and ({col}, {row}) differ by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("trace is {0:e}, expected zero")]
    TraceNotZero(f64),

    #[error("unsupported Hilbert-space dimension {0} (allowed 2..=64)")]
    Dimension(usize),

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("invalid system specification: {0}")]
    InvalidSpec(String),

    #[error("degenerate thermal weights for levels ({n}, {m}); analytic perturbation theory undefined")]
    DegenerateSpectrum { n: usize, m: usize },

    #[error("finite-difference step {h:e} leaves the state cone (min weight {min_weight:e})")]
    StepTooLarge { h: f64, min_weight: f64 },

    #[error("positivity breach at t = {time}: minimum eigenvalue {min_eig:e}")]
    PositivityBreach { time: f64, min_eig: f64 },

    #[error("adaptive integrator cannot meet tolerance at t = {time} with step {dt:e}")]
    StepSize { time: f64, dt: f64 },

    #[error("state is singular (minimum eigenvalue {min_eig:e}); operator is ill-defined")]
    SingularState { min_eig: f64 },
}
