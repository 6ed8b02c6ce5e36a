//! Streaming Gaussian-process regression over 2-D positions.
//!
//! The covariance factor is kept upper-triangular (`Uᵀ·U = K_y`) and grows by
//! bordering as observations arrive, so appending `m` points to an `n`-point
//! model costs `O(n²·m + m³)` instead of a full refactorization.

mod checkpoint;
mod factor;
mod lml;
mod model;
mod opcount;
mod optimize;
mod shared;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

pub use checkpoint::{
    format_checkpoint, parse_checkpoint, parse_samples, read_checkpoint, write_checkpoint,
};
pub use factor::{extend_cholesky, UpperFactor};
pub use lml::{lml_and_gradient, LmlReport};
pub use model::{GpModel, Prediction};
pub use opcount::{op_count, time_factorizations, BenchTiming, OpCount};
pub use optimize::{optimize_hypers, optimize_hypers_on, HyperBounds, HyperFit, OptimizerOptions};
pub use shared::SharedGp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GpError {
    #[error("invalid hyper-parameters: {0}")]
    InvalidHypers(String),
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("rejected {count} observation(s): covariance not positive definite after jitter")]
    Rejected { count: usize },
    #[error("model has no observations")]
    EmptyModel,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite input")]
    NonFinite,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Squared-exponential kernel parameters. All values are variances except the
/// length scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Process variance (m²).
    pub sigma_f2: f64,
    /// Observation noise variance (m²).
    pub sigma_n2: f64,
    /// Characteristic length scale (m).
    pub length_scale: f64,
}

impl HyperParams {
    pub fn new(sigma_f2: f64, sigma_n2: f64, length_scale: f64) -> Result<Self, GpError> {
        let h = Self {
            sigma_f2,
            sigma_n2,
            length_scale,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), GpError> {
        for (name, v) in [
            ("sigma_f2", self.sigma_f2),
            ("sigma_n2", self.sigma_n2),
            ("length_scale", self.length_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GpError::InvalidHypers(format!(
                    "{name} = {v} must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sigma_f2, self.sigma_n2, self.length_scale]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self {
            sigma_f2: a[0],
            sigma_n2: a[1],
            length_scale: a[2],
        }
    }

    /// Prior variance of a noisy observation, `σ_f² + σ_n²`.
    pub fn prior_variance(&self) -> f64 {
        self.sigma_f2 + self.sigma_n2
    }
}

impl Default for HyperParams {
    /// Starting point of the first hyper-parameter estimation.
    fn default() -> Self {
        Self {
            sigma_f2: 1.0,
            sigma_n2: 0.01,
            length_scale: 10.0,
        }
    }
}

/// Squared-exponential covariance `σ_f²·exp(−|a−b|²/(2l²))`.
#[inline]
pub fn kernel(a: Point, b: Point, h: &HyperParams) -> f64 {
    h.sigma_f2 * (-a.dist2(b) / (2.0 * h.length_scale * h.length_scale)).exp()
}
