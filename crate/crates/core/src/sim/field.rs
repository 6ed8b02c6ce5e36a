use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::geometry::Point;

/// Depth plane `offset + gx·x + gy·y` (m, positive down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub offset: f64,
    #[serde(default)]
    pub gx: f64,
    #[serde(default)]
    pub gy: f64,
}

impl Plane {
    fn eval(&self, p: Point) -> f64 {
        self.offset + self.gx * p.x + self.gy * p.y
    }
}

/// Isotropic Gaussian added to the base depth; negative amplitudes are shoals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub x: f64,
    pub y: f64,
    pub amplitude: f64,
    pub width: f64,
}

/// Regular grid of depths, row-major with `x` varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthGrid {
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldKind {
    Plane(Plane),
    GaussianSum { base: Plane, bumps: Vec<Bump> },
    Grid(DepthGrid),
}

/// Ground-truth seafloor over a bounding box `[x_min, y_min, x_max, y_max]`.
/// Grid fields take their box from the grid itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathymetryField {
    #[serde(flatten)]
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<[f64; 4]>,
}

impl BathymetryField {
    pub fn new(kind: FieldKind, bounds: Option<[f64; 4]>) -> Result<Self, SimError> {
        let f = Self { kind, bounds };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if let FieldKind::Grid(g) = &self.kind {
            if g.nx < 2 || g.ny < 2 {
                return bad(format!(
                    "grid needs at least 2x2 nodes, got {}x{}",
                    g.nx, g.ny
                ));
            }
            if g.values.len() != g.nx * g.ny {
                return bad(format!(
                    "grid has {} values for {}x{} nodes",
                    g.values.len(),
                    g.nx,
                    g.ny
                ));
            }
            if !(g.spacing[0] > 0.0 && g.spacing[1] > 0.0) {
                return bad("grid spacing must be positive".into());
            }
            if g.values.iter().any(|v| !v.is_finite()) {
                return bad("grid values must be finite".into());
            }
        } else {
            let Some(b) = self.bounds else {
                return bad("analytic fields need bounds = [x_min, y_min, x_max, y_max]".into());
            };
            if !(b[0] < b[2] && b[1] < b[3]) {
                return bad(format!("empty field bounds {b:?}"));
            }
        }
        if let FieldKind::GaussianSum { bumps, .. } = &self.kind {
            if bumps.iter().any(|b| !(b.width > 0.0)) {
                return bad("bump widths must be positive".into());
            }
        }
        Ok(())
    }

    /// `[x_min, y_min, x_max, y_max]`.
    pub fn extent(&self) -> [f64; 4] {
        match &self.kind {
            FieldKind::Grid(g) => [
                g.origin[0],
                g.origin[1],
                g.origin[0] + g.spacing[0] * (g.nx - 1) as f64,
                g.origin[1] + g.spacing[1] * (g.ny - 1) as f64,
            ],
            _ => self.bounds.unwrap_or([
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::INFINITY,
            ]),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let [x0, y0, x1, y1] = self.extent();
        p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1
    }
}

/// True depth at `p`.
pub fn true_depth(field: &BathymetryField, p: Point) -> Result<f64, SimError> {
    if !field.contains(p) {
        return Err(SimError::OutOfField { x: p.x, y: p.y });
    }
    Ok(match &field.kind {
        FieldKind::Plane(pl) => pl.eval(p),
        FieldKind::GaussianSum { base, bumps } => {
            base.eval(p)
                + bumps
                    .iter()
                    .map(|b| {
                        let d2 = (p.x - b.x).powi(2) + (p.y - b.y).powi(2);
                        b.amplitude * (-d2 / (2.0 * b.width * b.width)).exp()
                    })
                    .sum::<f64>()
        }
        FieldKind::Grid(g) => bilinear(g, p),
    })
}

fn bilinear(g: &DepthGrid, p: Point) -> f64 {
    let u = (p.x - g.origin[0]) / g.spacing[0];
    let v = (p.y - g.origin[1]) / g.spacing[1];
    let i = (u.floor() as usize).min(g.nx - 2);
    let j = (v.floor() as usize).min(g.ny - 2);
    let (fu, fv) = (u - i as f64, v - j as f64);
    let at = |i: usize, j: usize| g.values[j * g.nx + i];
    (1.0 - fv) * ((1.0 - fu) * at(i, j) + fu * at(i + 1, j))
        + fv * ((1.0 - fu) * at(i, j + 1) + fu * at(i + 1, j + 1))
}

/// One sonar ping at `p`: true depth plus zero-mean Gaussian noise of
/// standard deviation `sigma` (m). With `sigma == 0` no random draw is made.
pub fn sonar_sample(
    field: &BathymetryField,
    p: Point,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<f64, SimError> {
    let z = true_depth(field, p)?;
    if sigma == 0.0 {
        return Ok(z);
    }
    let noise =
        Normal::new(0.0, sigma).map_err(|e| SimError::Config(format!("sonar noise: {e}")))?;
    Ok(z + noise.sample(rng))
}

/// Smallest depth on a `step`-spaced lattice over the field box, for
/// checking the non-negative-depth requirement.
pub fn min_depth_on_lattice(field: &BathymetryField, step: f64) -> Result<f64, SimError> {
    let [x0, y0, x1, y1] = field.extent();
    let nx = ((x1 - x0) / step).ceil() as usize;
    let ny = ((y1 - y0) / step).ceil() as usize;
    let mut lo = f64::INFINITY;
    for j in 0..=ny {
        for i in 0..=nx {
            let p = Point::new(
                (x0 + i as f64 * step).min(x1),
                (y0 + j as f64 * step).min(y1),
            );
            lo = lo.min(true_depth(field, p)?);
        }
    }
    Ok(lo)
}
