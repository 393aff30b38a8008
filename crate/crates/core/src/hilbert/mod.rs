//! Finite-dimensional quantum mechanics: normalized state vectors on labeled
//! bases, Hermitian observables with spectral projectors, unitary evolution,
//! Born probabilities, projective state update, many-worlds style branching,
//! and density matrices with partial traces.
//!
//! Types are immutable once built. The only operation that consumes
//! randomness is [`measure`], and it takes the random stream explicitly.

mod branch;
mod density;
mod observable;
mod space;
mod state;
mod unitary;

pub use branch::{branch, Branch, BranchSet};
pub use density::DensityMatrix;
pub use observable::{born_distribution, collapse, measure, BornTable, Observable, Outcome};
pub use space::{BasisLabel, Factor, Space};
pub use state::StateVector;
pub use unitary::{Provenance, UnitaryMap};

use num_complex::Complex64;
use thiserror::Error;

/// Tolerance for normalization, hermiticity and unitarity checks.
pub const TOL: f64 = 1e-12;
/// Relative gap below which two eigenvalues are treated as one eigenspace.
pub const EIGEN_MERGE_TOL: f64 = 1e-9;
/// Outcomes with Born probability at or below this are impossible.
pub const IMPOSSIBLE: f64 = 1e-14;

pub type CMatrix = nalgebra::DMatrix<Complex64>;
pub type CVector = nalgebra::DVector<Complex64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("invalid projector set: {0}")]
    InvalidProjectors(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),
    #[error("outcome `{label}` has probability {probability:e}; cannot condition on it")]
    ImpossibleOutcome { label: String, probability: f64 },
    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),
    #[error("invalid factor subset {0:?}")]
    InvalidFactorSubset(Vec<usize>),
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
}

pub type Result<T> = std::result::Result<T, HilbertError>;

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
