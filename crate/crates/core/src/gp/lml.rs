use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{GpError, GpModel, HyperParams};
use crate::geometry::Point;

/// Log marginal likelihood and its gradient with respect to
/// `(σ_f², σ_n², l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmlReport {
    pub lml: f64,
    pub grad: [f64; 3],
}

/// Gradient from `½·tr((ααᵀ − K_y⁻¹)·∂K_y/∂θ)` given pairwise squared distances.
fn gradient(alpha: &[f64], kinv: &DMatrix<f64>, d2: &DMatrix<f64>, h: &HyperParams) -> [f64; 3] {
    let n = alpha.len();
    let inv_2l2 = 1.0 / (2.0 * h.length_scale * h.length_scale);
    let l3 = h.length_scale.powi(3);
    let (mut gf, mut gn, mut gl) = (0.0, 0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let w = alpha[i] * alpha[j] - kinv[(i, j)];
            let r2 = d2[(i, j)];
            let e = (-r2 * inv_2l2).exp();
            gf += w * e;
            gl += w * r2 / l3 * h.sigma_f2 * e;
        }
        gn += alpha[j] * alpha[j] - kinv[(j, j)];
    }
    [0.5 * gf, 0.5 * gn, 0.5 * gl]
}

pub(crate) fn squared_distances(xs: &[Point]) -> DMatrix<f64> {
    let n = xs.len();
    DMatrix::from_fn(n, n, |i, j| xs[i].dist2(xs[j]))
}

/// `(L·Lᵀ)⁻¹ = L⁻ᵀ·L⁻¹`. Rows of `L⁻¹` are built as contiguous columns of
/// its transpose, then multiplied out.
fn inverse_from_lower(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let mut wt = DMatrix::<f64>::zeros(n, n);
    let mut row = vec![0.0; n];
    for i in 0..n {
        row[..=i].iter_mut().for_each(|v| *v = 0.0);
        row[i] = 1.0;
        for p in 0..i {
            let a = l[(i, p)];
            if a != 0.0 {
                let src = &wt.as_slice()[p * n..=p * n + p];
                row[..=p].iter_mut().zip(src).for_each(|(r, w)| *r -= a * w);
            }
        }
        let d = l[(i, i)];
        wt.as_mut_slice()[i * n..=i * n + i]
            .iter_mut()
            .zip(&row[..=i])
            .for_each(|(w, r)| *w = r / d);
    }
    &wt * wt.transpose()
}

/// Dense evaluation on precomputed squared distances; shared by the optimizer.
pub(crate) fn lml_dense(
    d2: &DMatrix<f64>,
    y: &DVector<f64>,
    h: &HyperParams,
) -> Result<LmlReport, GpError> {
    h.validate()?;
    let n = y.len();
    let inv_2l2 = 1.0 / (2.0 * h.length_scale * h.length_scale);
    let mut k = d2.map(|r2| h.sigma_f2 * (-r2 * inv_2l2).exp());
    for i in 0..n {
        k[(i, i)] += h.sigma_n2;
    }
    let chol = nalgebra::Cholesky::new(k).ok_or(GpError::NotPositiveDefinite {
        pivot: 0,
        value: f64::NAN,
    })?;
    let alpha = chol.solve(y);
    let half_log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let lml = -0.5 * y.dot(&alpha) - half_log_det - 0.5 * n as f64 * (2.0 * PI).ln();
    let kinv = inverse_from_lower(&chol.l());
    Ok(LmlReport {
        lml,
        grad: gradient(alpha.as_slice(), &kinv, d2, h),
    })
}

/// Log marginal likelihood of `(xs, ys)` under `hypers`, computed from a fresh
/// dense factorization.
pub fn lml_and_gradient(
    xs: &[Point],
    ys: &[f64],
    hypers: &HyperParams,
) -> Result<LmlReport, GpError> {
    if xs.len() != ys.len() {
        return Err(GpError::Dimension(format!(
            "{} positions vs {} depths",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(GpError::EmptyModel);
    }
    lml_dense(
        &squared_distances(xs),
        &DVector::from_column_slice(ys),
        hypers,
    )
}

impl GpModel {
    /// Log marginal likelihood from the model's own factor:
    /// `log|K_y| = 2·Σ ln U[j,j]`.
    pub fn log_marginal_likelihood(&self) -> Result<LmlReport, GpError> {
        if self.is_empty() {
            return Err(GpError::EmptyModel);
        }
        let n = self.len();
        let white = self.whitened_targets();
        let quad: f64 = white.iter().map(|v| v * v).sum();
        let lml = -0.5 * quad - self.factor().half_log_det() - 0.5 * n as f64 * (2.0 * PI).ln();
        let w = self.factor().inverse_transposed();
        let kinv = w.tr_mul(&w);
        let grad = gradient(
            self.alpha(),
            &kinv,
            &squared_distances(self.train_x()),
            self.hypers(),
        );
        Ok(LmlReport { lml, grad })
    }
}
