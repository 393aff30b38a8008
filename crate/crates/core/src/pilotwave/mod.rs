//! Continuum pilot-wave dynamics on a periodic grid of one or two
//! configuration axes (ħ = 1): split-operator Schrödinger evolution, guided
//! trajectories, equilibrium sampling, and checks of equivariance and
//! non-crossing.

mod checks;
mod conditional;
mod ensemble;
mod evolve;
mod grid;
mod guidance;
pub mod io;
mod spectral;

pub use checks::{
    check_equivariance, check_equivariance_history, check_noncrossing, ks_distance, ks_threshold_99, marginal_cdf,
    EquivarianceReport, EquivarianceVerdict, MAX_ABSORBED_FRACTION,
};
pub use conditional::{conditional_wavefunction, SLICE_NORM_FLOOR};
pub use ensemble::{integrate_trajectories, sample_equilibrium, BohmianEnsemble, Evolution, ABSORB_MARGIN_CELLS};
pub use evolve::{evolve, step_schrodinger, PhysicsParams, Potential, SplitOperator};
pub use grid::{init_wavefunction, Axis, Gaussian, GridSpec, GridWavefunction, Profile, MAX_LEAKAGE};
pub use guidance::{velocity_field, VelocityField, NODE_FLOOR};
pub use spectral::expected_momentum;

use thiserror::Error;

/// Allowed deviation of the discrete L² norm from 1.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PilotError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("wavefunction has non-finite values")]
    NonFinite,
    #[error("wavefunction is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("profile leaks {0:e} of its mass outside the grid")]
    Leakage(f64),
    #[error("invalid physics parameters: {0}")]
    InvalidParams(String),
    #[error("time step {dt} exceeds the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },
    #[error("ensemble must contain at least one configuration")]
    EmptyEnsemble,
    #[error("operation needs a one-dimensional configuration space")]
    NotOneDimensional,
    #[error("operation needs a two-dimensional configuration space")]
    NotTwoDimensional,
    #[error("slice norm {0:e} is too small to condition on")]
    NodeSlice(f64),
    #[error("ensemble time {ensemble} differs from wavefunction time {wavefunction}")]
    TimeMismatch { ensemble: f64, wavefunction: f64 },
}

pub type Result<T> = std::result::Result<T, PilotError>;
