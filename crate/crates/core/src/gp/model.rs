use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{kernel, GpError, HyperParams, UpperFactor};
use crate::geometry::Point;

/// Predictive mean (m, positive down) and variance (m²) of a noisy depth
/// observation at each test point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl Prediction {
    pub fn std(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v.sqrt()).collect()
    }
}

/// GP regression model over 2-D positions with a zero prior mean (or,
/// optionally, the running data mean).
#[derive(Debug, Clone)]
pub struct GpModel {
    hypers: HyperParams,
    center: bool,
    xs: Vec<Point>,
    ys: Vec<f64>,
    /// Upper columns of `K_y`, column `j` holding rows `0..=j`.
    cov: Vec<Arc<[f64]>>,
    factor: UpperFactor,
    /// `U⁻ᵀ·y`
    white_y: Vec<f64>,
    /// `U⁻ᵀ·1`, only kept when centering.
    white_ones: Vec<f64>,
    alpha: OnceLock<Vec<f64>>,
}

impl GpModel {
    pub fn new(hypers: HyperParams) -> Result<Self, GpError> {
        hypers.validate()?;
        Ok(Self {
            hypers,
            center: false,
            xs: Vec::new(),
            ys: Vec::new(),
            cov: Vec::new(),
            factor: UpperFactor::new(),
            white_y: Vec::new(),
            white_ones: Vec::new(),
            alpha: OnceLock::new(),
        })
    }

    /// Model that regresses depth about the running mean of the observations.
    pub fn new_centered(hypers: HyperParams) -> Result<Self, GpError> {
        let mut m = Self::new(hypers)?;
        m.center = true;
        Ok(m)
    }

    /// Fits a model to a whole data set in one block.
    pub fn fit(hypers: HyperParams, xs: &[Point], ys: &[f64]) -> Result<Self, GpError> {
        let mut m = Self::new(hypers)?;
        if !xs.is_empty() {
            m.append(xs, ys)?;
        }
        Ok(m)
    }

    pub fn hypers(&self) -> &HyperParams {
        &self.hypers
    }

    pub fn is_centered(&self) -> bool {
        self.center
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn train_x(&self) -> &[Point] {
        &self.xs
    }

    pub fn train_y(&self) -> &[f64] {
        &self.ys
    }

    pub fn factor(&self) -> &UpperFactor {
        &self.factor
    }

    /// Prior mean currently in use.
    pub fn mean_offset(&self) -> f64 {
        if self.center && !self.ys.is_empty() {
            self.ys.iter().sum::<f64>() / self.ys.len() as f64
        } else {
            0.0
        }
    }

    /// Dense `K_y` (noise on the diagonal).
    pub fn covariance(&self) -> DMatrix<f64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i <= j {
                self.cov[j][i]
            } else {
                self.cov[i][j]
            }
        })
    }

    /// `‖Uᵀ·U − K_y‖_F / ‖K_y‖_F`.
    pub fn reconstruction_error(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let u = self.factor.to_dense();
        let k = self.covariance();
        (u.tr_mul(&u) - &k).norm() / k.norm()
    }

    /// Whitened, centred targets `U⁻ᵀ·(y − μ)`.
    pub(crate) fn whitened_targets(&self) -> Vec<f64> {
        let mu = self.mean_offset();
        if mu == 0.0 {
            return self.white_y.clone();
        }
        self.white_y
            .iter()
            .zip(&self.white_ones)
            .map(|(a, b)| a - mu * b)
            .collect()
    }

    /// Cached `α = K_y⁻¹·(y − μ)`.
    pub fn alpha(&self) -> &[f64] {
        self.alpha
            .get_or_init(|| self.factor.solve(&self.whitened_targets()))
    }

    /// Appends observations, bordering the factor.
    ///
    /// On a factorization failure the block is retried once with
    /// `1e-10·σ_f²` added to the new diagonal entries; if that fails too the
    /// observations are rejected and the model is left unchanged.
    pub fn append(&mut self, xs: &[Point], ys: &[f64]) -> Result<(), GpError> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(GpError::Dimension(format!(
                "{} positions vs {} depths",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().any(|p| !p.x.is_finite() || !p.y.is_finite())
            || ys.iter().any(|y| !y.is_finite())
        {
            return Err(GpError::NonFinite);
        }
        let n = self.len();
        let m = xs.len();
        let h = self.hypers;
        let k12 = DMatrix::from_fn(n, m, |i, c| kernel(self.xs[i], xs[c], &h));
        let mut k22 = DMatrix::from_fn(m, m, |i, j| kernel(xs[i], xs[j], &h));
        for i in 0..m {
            k22[(i, i)] += h.sigma_n2;
        }
        let jitter = 1e-10 * h.sigma_f2;
        let (factor, used_jitter) = match self.factor.extend(&k12, &k22, 0.0) {
            Ok(f) => (f, 0.0),
            Err(_) => match self.factor.extend(&k12, &k22, jitter) {
                Ok(f) => {
                    log::warn!("added jitter {jitter:e} to {m} new diagonal entries");
                    (f, jitter)
                }
                Err(_) => return Err(GpError::Rejected { count: m }),
            },
        };
        for c in 0..m {
            let mut col = Vec::with_capacity(n + c + 1);
            col.extend((0..n).map(|i| k12[(i, c)]));
            col.extend((0..=c).map(|i| k22[(i, c)]));
            col[n + c] += used_jitter;
            self.cov.push(col.into());
        }
        self.factor = factor;
        self.xs.extend_from_slice(xs);
        self.ys.extend_from_slice(ys);
        self.white_y.extend_from_slice(ys);
        self.factor.forward_from(&mut self.white_y, n);
        if self.center {
            self.white_ones.extend(std::iter::repeat_n(1.0, m));
            self.factor.forward_from(&mut self.white_ones, n);
        }
        self.alpha = OnceLock::new();
        Ok(())
    }

    /// Rebuilds `K_y` and its factor from scratch under new hyper-parameters.
    pub fn with_hypers(&self, hypers: HyperParams) -> Result<Self, GpError> {
        let mut m = Self::new(hypers)?;
        m.center = self.center;
        if !self.is_empty() {
            m.append(&self.xs, &self.ys)?;
        }
        Ok(m)
    }

    fn cross_cov(&self, x: Point) -> Vec<f64> {
        self.xs
            .iter()
            .map(|&p| kernel(p, x, &self.hypers))
            .collect()
    }

    /// Predictive means only; costs `O(n)` per test point once `α` is cached.
    pub fn predict_mean(&self, xs_star: &[Point]) -> Result<Vec<f64>, GpError> {
        if self.is_empty() {
            return Err(GpError::EmptyModel);
        }
        let alpha = self.alpha();
        let mu = self.mean_offset();
        Ok(xs_star
            .iter()
            .map(|&x| {
                mu + self
                    .xs
                    .iter()
                    .zip(alpha)
                    .map(|(&p, a)| kernel(p, x, &self.hypers) * a)
                    .sum::<f64>()
            })
            .collect())
    }

    /// Batched prediction of means and observation variances.
    ///
    /// Variance is `σ_f² + σ_n² − ‖U⁻ᵀ·k_*‖²`, i.e. the diagonal of the Schur
    /// complement obtained by bordering the factor with the test points.
    pub fn predict(&self, xs_star: &[Point]) -> Result<Prediction, GpError> {
        if self.is_empty() {
            return Err(GpError::EmptyModel);
        }
        let alpha = self.alpha();
        let mu = self.mean_offset();
        let prior = self.hypers.prior_variance();
        let mut mean = Vec::with_capacity(xs_star.len());
        let mut variance = Vec::with_capacity(xs_star.len());
        for &x in xs_star {
            let mut k = self.cross_cov(x);
            mean.push(mu + k.iter().zip(alpha).map(|(a, b)| a * b).sum::<f64>());
            self.factor.forward_from(&mut k, 0);
            let explained: f64 = k.iter().map(|v| v * v).sum();
            variance.push((prior - explained).max(0.0));
        }
        Ok(Prediction { mean, variance })
    }

    /// Like [`predict`](Self::predict) but for the noise-free depth: the
    /// observation noise is taken out of each variance.
    pub fn predict_latent(&self, xs_star: &[Point]) -> Result<Prediction, GpError> {
        let mut p = self.predict(xs_star)?;
        let sn2 = self.hypers.sigma_n2;
        for v in &mut p.variance {
            *v = (*v - sn2).max(0.0);
        }
        Ok(p)
    }
}
