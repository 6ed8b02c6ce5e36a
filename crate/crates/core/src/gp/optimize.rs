use nalgebra::{DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::lml::{lml_dense, squared_distances};
use super::{GpError, GpModel, HyperParams};
use crate::geometry::Point;

/// Box constraints on the raw hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub sigma_f2: (f64, f64),
    pub sigma_n2: (f64, f64),
    pub length_scale: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        Self {
            sigma_f2: (1e-6, 1e6),
            sigma_n2: (1e-6, 1e6),
            length_scale: (1e-6, 1e6),
        }
    }
}

impl HyperBounds {
    fn log_box(&self) -> Result<(Vector3<f64>, Vector3<f64>), GpError> {
        let b = [self.sigma_f2, self.sigma_n2, self.length_scale];
        for (lo, hi) in b {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(GpError::InvalidHypers(format!("bad bounds [{lo}, {hi}]")));
            }
        }
        Ok((
            Vector3::new(b[0].0.ln(), b[1].0.ln(), b[2].0.ln()),
            Vector3::new(b[0].1.ln(), b[1].1.ln(), b[2].1.ln()),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    /// Projected-gradient tolerance in log-parameter space.
    pub grad_tol: f64,
    /// Relative change in objective treated as converged.
    pub rel_tol: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            grad_tol: 1e-6,
            rel_tol: 1e-12,
        }
    }
}

/// Outcome of a maximum-likelihood fit. `converged == false` means the
/// iteration cap was hit and `hypers` is the best point seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperFit {
    pub hypers: HyperParams,
    pub lml: f64,
    pub initial_lml: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Objective {
    d2: nalgebra::DMatrix<f64>,
    y: DVector<f64>,
    evaluations: usize,
}

impl Objective {
    /// Negative LML and its gradient in log-parameter space.
    fn eval(&mut self, u: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
        self.evaluations += 1;
        let h = HyperParams::from_array([u[0].exp(), u[1].exp(), u[2].exp()]);
        let r = lml_dense(&self.d2, &self.y, &h).ok()?;
        if !r.lml.is_finite() {
            return None;
        }
        let theta = h.as_array();
        let g = Vector3::new(
            -r.grad[0] * theta[0],
            -r.grad[1] * theta[1],
            -r.grad[2] * theta[2],
        );
        Some((-r.lml, g))
    }
}

fn project(u: &Vector3<f64>, lo: &Vector3<f64>, hi: &Vector3<f64>) -> Vector3<f64> {
    Vector3::from_fn(|i, _| u[i].clamp(lo[i], hi[i]))
}

/// Maximizes the log marginal likelihood of `(xs, ys)` over the hyper-parameters.
///
/// Works in log-parameters with a projected quasi-Newton (BFGS) iteration and
/// a backtracking line search, so every accepted step increases the
/// likelihood and the result never scores below `initial`.
pub fn optimize_hypers_on(
    xs: &[Point],
    ys: &[f64],
    initial: HyperParams,
    bounds: &HyperBounds,
    opts: &OptimizerOptions,
) -> Result<HyperFit, GpError> {
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
    initial.validate()?;
    let (lo, hi) = bounds.log_box()?;
    let mut obj = Objective {
        d2: squared_distances(xs),
        y: DVector::from_column_slice(ys),
        evaluations: 0,
    };
    let u0 = Vector3::new(
        initial.sigma_f2.ln(),
        initial.sigma_n2.ln(),
        initial.length_scale.ln(),
    );
    let initial_lml = obj.eval(&u0).map(|(f, _)| -f).unwrap_or(f64::NEG_INFINITY);
    let mut u = project(&u0, &lo, &hi);
    let (mut f, mut g) = match obj.eval(&u) {
        Some(v) => v,
        None => {
            return Err(GpError::NotPositiveDefinite {
                pivot: 0,
                value: f64::NAN,
            })
        }
    };
    let mut hinv = Matrix3::identity();
    let mut converged = false;
    let mut iterations = 0;
    let at_bound = |u: &Vector3<f64>, g: &Vector3<f64>, i: usize| {
        (u[i] <= lo[i] + 1e-12 && g[i] > 0.0) || (u[i] >= hi[i] - 1e-12 && g[i] < 0.0)
    };
    while iterations < opts.max_iterations {
        iterations += 1;
        let free = Vector3::from_fn(|i, _| if at_bound(&u, &g, i) { 0.0 } else { 1.0 });
        let pg = g.component_mul(&free);
        if pg.amax() < opts.grad_tol {
            converged = true;
            break;
        }
        let mut dir = -(hinv * pg).component_mul(&free);
        if dir.dot(&pg) >= 0.0 {
            hinv = Matrix3::identity();
            dir = -pg;
        }
        // cap a single step at a factor of e² in any raw parameter
        let scale = (2.0 / dir.amax()).min(1.0);
        dir *= scale;
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial = project(&(u + dir * step), &lo, &hi);
            if let Some((ft, gt)) = obj.eval(&trial) {
                if ft <= f + 1e-4 * g.dot(&(trial - u)) && ft <= f {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((un, fnew, gnew)) = accepted else {
            if hinv != Matrix3::identity() {
                hinv = Matrix3::identity();
                continue;
            }
            converged = true;
            break;
        };
        let s = un - u;
        let yv = gnew - g;
        let sy = s.dot(&yv);
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let i3 = Matrix3::identity();
            hinv = (i3 - s * yv.transpose() * rho) * hinv * (i3 - yv * s.transpose() * rho)
                + s * s.transpose() * rho;
        }
        let done = (f - fnew).abs() <= opts.rel_tol * f.abs().max(1.0);
        u = un;
        f = fnew;
        g = gnew;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "hyper-parameter optimization stopped after {iterations} iterations without converging"
        );
    }
    let mut best = HyperParams::from_array([u[0].exp(), u[1].exp(), u[2].exp()]);
    let mut lml = -f;
    if lml < initial_lml {
        // projection of an out-of-bounds start can only lose; keep the start
        best = initial;
        lml = initial_lml;
    }
    Ok(HyperFit {
        hypers: best,
        lml,
        initial_lml,
        iterations,
        evaluations: obj.evaluations,
        converged,
    })
}

/// Maximum-likelihood hyper-parameters for the model's training data.
pub fn optimize_hypers(
    model: &GpModel,
    initial: HyperParams,
    bounds: &HyperBounds,
    opts: &OptimizerOptions,
) -> Result<HyperFit, GpError> {
    let mu = model.mean_offset();
    let ys: Vec<f64> = model.train_y().iter().map(|y| y - mu).collect();
    optimize_hypers_on(model.train_x(), &ys, initial, bounds, opts)
}
