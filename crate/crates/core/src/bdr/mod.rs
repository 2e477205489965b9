//! Bayesian dimensionality reduction by coordinate-ascent variational
//! inference.
//!
//! The generative structure couples a projection matrix `Q` (D×R), latent
//! coordinates `Z` (R×N) and gamma-distributed precisions `Φ` over the
//! columns of `Q`. Each iteration refreshes the factored posterior in the
//! order latents → precisions → projection, until the posterior mean of `Q`
//! stops moving. The fitted mean is then orthonormalized by QR and used as a
//! fixed linear projector, `U = (X - c)ᵀ Q_orth`, that applies to unseen data
//! as well as to the training set.
//!
//! Two priors are supported: an element-wise prior with one precision per
//! entry of `Q`, and an ARD prior with one precision per column. In ARD mode
//! the fitted mean is rotated to its canonical (orthogonal-column) form and
//! columns whose relative precision `‖q_max‖² / ‖q_s‖²` reaches the prune
//! threshold are dropped.

mod fit;
mod pca;
mod updates;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{LinalgError, Matrix};
use crate::scalar::Scalar;

pub use fit::{ard_prune, bdr_fit, bdr_init, bdr_project, orthonormalize, BdrModel, BdrRun, FitReport};
pub use pca::pca_baseline;
pub use updates::{update_latents, update_precision, update_precision_ard, update_precision_elementwise, update_projection, BdrWorkspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// One gamma precision per entry of `Q`.
    ElementWise,
    /// One gamma precision per column of `Q`, shared across dimensions.
    Ard,
}

/// Hyperparameters and loop controls for a BDR fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BdrConfig {
    /// Requested number of components.
    pub r: usize,
    pub prior_mode: PriorMode,
    /// Latent noise variance σ_z².
    pub sigma_z_sq: f64,
    /// Gamma prior shape.
    pub alpha_phi: f64,
    /// Gamma prior scale.
    pub beta_phi: f64,
    pub max_iter: usize,
    /// Convergence threshold on the relative Frobenius change of `Q_μ`.
    pub tol: f64,
    pub seed: u64,
    pub center_data: bool,
    /// ARD only: a canonical component is dropped once its relative
    /// precision reaches this value.
    pub prune_threshold: f64,
}

impl Default for BdrConfig {
    fn default() -> Self {
        Self {
            r: 2,
            prior_mode: PriorMode::Ard,
            sigma_z_sq: 0.1,
            alpha_phi: 1.0,
            beta_phi: 1.0,
            max_iter: 200,
            tol: 1e-5,
            seed: 0,
            center_data: true,
            prune_threshold: 10.0,
        }
    }
}

impl BdrConfig {
    pub fn validate(&self) -> Result<(), BdrError> {
        let positive = [
            ("sigma_z_sq", self.sigma_z_sq),
            ("alpha_phi", self.alpha_phi),
            ("beta_phi", self.beta_phi),
            ("tol", self.tol),
            ("prune_threshold", self.prune_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BdrError::BadConfig(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.r == 0 {
            return Err(BdrError::BadConfig("r must be at least 1".into()));
        }
        if self.max_iter == 0 {
            return Err(BdrError::BadConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Full validation against a D×N data shape.
    pub fn validate_for(&self, d: usize, n: usize) -> Result<(), BdrError> {
        self.validate()?;
        if n < 2 {
            return Err(BdrError::BadShape(format!("need at least 2 samples, got {n}")));
        }
        if self.r > d.min(n) {
            return Err(BdrError::BadConfig(format!(
                "r = {} exceeds min(D, N) = {}",
                self.r,
                d.min(n)
            )));
        }
        Ok(())
    }
}

/// Posterior means of the precision parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PrecisionMeans<T> {
    /// D×R, one entry per element of `Q`.
    ElementWise(Matrix<T>),
    /// Length R, one entry per column of `Q`.
    Ard(Vec<T>),
}

impl<T: Scalar> PrecisionMeans<T> {
    pub fn values(&self) -> &[T] {
        match self {
            PrecisionMeans::ElementWise(m) => m.as_slice(),
            PrecisionMeans::Ard(v) => v,
        }
    }

    pub fn all_positive(&self) -> bool {
        self.values().iter().all(|&v| v > T::zero() && v.is_finite())
    }
}

/// Variational posterior statistics for one CAVI run.
#[derive(Debug, Clone, PartialEq)]
pub struct BdrState<T> {
    /// Posterior mean of `Q`, D×R.
    pub q_mu: Matrix<T>,
    /// Posterior covariance of each column of `Q`, D×D.
    pub sigma_q: Vec<Matrix<T>>,
    pub phi: PrecisionMeans<T>,
    /// Posterior mean of `Z`, R×N.
    pub z_mu: Matrix<T>,
    /// Shared posterior covariance of every column of `Z`, R×R.
    pub sigma_z: Matrix<T>,
    pub iteration: usize,
    pub last_delta: T,
}

impl<T: Scalar> BdrState<T> {
    pub fn dims(&self) -> (usize, usize) {
        self.q_mu.shape()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BdrError {
    #[error("bad shape: {0}")]
    BadShape(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("projection mean is rank deficient at column {column}; reduce the component count")]
    RankDeficient { column: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: String, got: String },
}

impl BdrError {
    pub(crate) fn numerical(context: &str, err: LinalgError) -> Self {
        BdrError::NumericalFailure(format!("{context}: {err}"))
    }
}
