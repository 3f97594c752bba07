use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("requested {requested} eigenpairs from a matrix of size {n}")]
    TooManyEigenpairs { requested: usize, n: usize },
    #[error("inverse iteration failed for eigenvalue index {index} (residual {residual:.3e})")]
    InverseIteration { index: usize, residual: f64 },
    #[error("dense oracle refuses n = {n} (cap {cap})")]
    OracleCap { n: usize, cap: usize },
    #[error("CG did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    CgNonConvergence { iterations: usize, residual: f64 },
    #[error("operator is not positive definite (curvature {curvature:.3e} at CG step {iteration})")]
    Indefinite { iteration: usize, curvature: f64 },
    #[error("eigensolver stagnated after {iterations} iterations; residuals {residuals:?}")]
    Stagnation { iterations: usize, residuals: Vec<f64> },
    #[error("inertia check failed: expected {expected} eigenvalues below {shift:.6e}, found {found}")]
    Inertia { shift: f64, expected: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}
