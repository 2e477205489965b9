//! Deterministic dense linear algebra and seeded sampling.
//!
//! Everything here is a pure function of its inputs: Cholesky factorization
//! and SPD solves, a Householder thin QR with a non-negative diagonal
//! convention, a symmetric eigensolver (tridiagonalization + implicit QL),
//! principal angles between subspaces, and Gaussian matrix sampling from a
//! seeded ChaCha stream.

mod angles;
mod cholesky;
mod eigen;
mod matrix;
mod qr;
mod rng;

use thiserror::Error;

pub use angles::principal_angles;
pub use cholesky::{cholesky_factor, spd_inverse, spd_solve, SpdFactor};
pub use eigen::{sym_eig, SymEig};
pub use matrix::Matrix;
pub use qr::{thin_qr, ThinQr};
pub use rng::{gaussian_matrix, SeededRng};

/// Named tolerances shared by the factorizations and their tests.
pub mod tol {
    /// Relative Frobenius residual a factor must reconstruct its input to.
    pub const FACTOR_RESIDUAL: f64 = 1e-10;
    /// Symmetry check, relative to `max(1, max |a_ij|)`.
    pub const SYMMETRY: f64 = 1e-12;
    /// A Cholesky pivot at or below this fraction of the largest diagonal
    /// entry means the input is singular or indefinite.
    pub const CHOLESKY_PIVOT: f64 = 1e-14;
    /// Column-norm ratio below which QR reports rank deficiency.
    pub const QR_RANK: f64 = 1e-12;
    /// Orthonormality check used by principal angles.
    pub const ORTHONORMAL: f64 = 1e-8;
    /// Iteration cap multiplier for the eigensolver: `30·n` QL sweeps.
    pub const EIG_SWEEPS_PER_DIM: usize = 30;
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric positive definite (pivot {pivot} at index {index})")]
    NotSpd { index: usize, pivot: f64 },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: String, got: String },
    #[error("matrix is rank deficient at column {column}")]
    RankDeficient { column: usize },
    #[error("eigensolver did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("columns are not orthonormal (max deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

pub(crate) fn check_symmetric<T: crate::Scalar>(a: &Matrix<T>) -> Result<(), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::DimMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", a.rows(), a.cols()),
        });
    }
    let scale = a.max_abs().max(T::one());
    let asym = a.asymmetry();
    if asym > T::tol(tol::SYMMETRY) * scale || asym.is_nan() {
        return Err(LinalgError::NotSymmetric {
            asymmetry: asym.to_f64_lossy(),
        });
    }
    Ok(())
}
