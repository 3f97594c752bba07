//! Linear algebra kernels for the magstep solvers.
//!
//! Everything here is small and self-contained: a Sturm-bisection tridiagonal
//! eigensolver, a Householder-based dense Hermitian oracle, a CSR Hermitian
//! matrix type, conjugate gradients with an optional orthogonality constraint,
//! a banded LDLᴴ factorization with inertia, and block inverse iteration for
//! the bottom of a Hermitian spectrum.

mod band;
mod cg;
mod dense;
mod eigs;
mod error;
mod random;
mod scalar;
mod sparse;
mod tridiag;

pub use band::BandLdl;
pub use cg::{cg_solve, CgOptions, CgReport, LinearOperator, Shifted};
pub use dense::{dense_hermitian_eigs, DenseHermitian, DENSE_ORACLE_CAP};
pub use eigs::{hermitian_smallest_eigs, EigOptions, EigStats, InnerSolve};
pub use error::LinalgError;
pub use random::random_hermitian_spd;
pub use scalar::{axpy, dot, norm, Scalar};
pub use sparse::{SparseHermitian, TripletBuilder};
pub use tridiag::{tridiag_smallest, TriDiag};

pub use num_complex::Complex64 as C64;

/// Eigenvalue with a unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub value: f64,
    pub vector: Vec<T>,
}

pub type Result<T> = std::result::Result<T, LinalgError>;
