use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{point_in_polygon, wrap_angle, GeometryError, Point, Polygon};

/// Circular arc swept clockwise (increasing compass bearing) from
/// `psi_start` to `psi_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub center: Point,
    pub radius: f64,
    pub psi_start: f64,
    pub psi_end: f64,
}

impl Arc {
    /// Angular span in `(0, 2pi]`; coincident end bearings denote a full circle.
    pub fn span(&self) -> f64 {
        arc_span(self.psi_start, self.psi_end)
    }

    pub fn point_at(&self, bearing: f64) -> Point {
        self.center.offset(bearing, self.radius)
    }
}

/// Clockwise angular length from `start` to `end`, in `(0, 2pi]`.
pub(crate) fn arc_span(start: f64, end: f64) -> f64 {
    let d = end - start;
    if d > 0.0 && d <= 2.0 * PI {
        return d;
    }
    let r = d.rem_euclid(2.0 * PI);
    if r == 0.0 {
        2.0 * PI
    } else {
        r
    }
}

/// Bearings at which the circle of radius `r` about `c` meets segment `ab`.
fn circle_segment_bearings(c: Point, r: f64, a: Point, b: Point, out: &mut Vec<f64>) {
    let d = b - a;
    let f = a - c;
    let qa = d.norm2();
    let qb = 2.0 * f.dot(d);
    let qc = f.norm2() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return;
    }
    let sq = disc.sqrt();
    for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
        if (0.0..=1.0).contains(&t) {
            out.push(c.bearing_to(a + d * t));
        }
    }
}

/// Widest bearing interval whose points at distance `r` from `p` all lie in
/// the polygon. A fully enclosed circle yields a `2pi` span centred on north.
pub fn arc_within_polygon(p: Point, poly: &Polygon, r: f64) -> Result<Arc, GeometryError> {
    let mut cuts = Vec::new();
    for (a, b) in poly.edges() {
        circle_segment_bearings(p, r, a, b, &mut cuts);
    }
    let full = Arc {
        center: p,
        radius: r,
        psi_start: -PI,
        psi_end: PI,
    };
    if cuts.is_empty() {
        return if point_in_polygon(p.offset(0.0, r), poly) {
            Ok(full)
        } else {
            Err(GeometryError::NoInteriorArc { radius: r })
        };
    }
    let mut cuts: Vec<f64> = cuts.into_iter().map(|b| b.rem_euclid(2.0 * PI)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let k = cuts.len();
    // gap i spans cuts[i] -> cuts[i+1] (wrapping)
    let inside: Vec<bool> = (0..k)
        .map(|i| {
            let start = cuts[i];
            let span = arc_span(start, cuts[(i + 1) % k]);
            point_in_polygon(p.offset(start + 0.5 * span, r), poly)
        })
        .collect();
    if inside.iter().all(|&v| v) {
        return Ok(full);
    }
    // start scanning just after an outside gap so runs never wrap mid-scan
    let first_out = inside.iter().position(|&v| !v).unwrap();
    let mut best: Option<(f64, f64)> = None;
    let mut run: Option<(usize, f64)> = None;
    for step in 1..=k {
        let i = (first_out + step) % k;
        let span = arc_span(cuts[i], cuts[(i + 1) % k]);
        if inside[i] {
            run = Some(match run {
                Some((s, len)) => (s, len + span),
                None => (i, span),
            });
        } else if let Some((s, len)) = run.take() {
            if best.is_none_or(|(_, l)| len > l) {
                best = Some((cuts[s], len));
            }
        }
    }
    if let Some((s, len)) = run {
        if best.is_none_or(|(_, l)| len > l) {
            best = Some((cuts[s], len));
        }
    }
    match best {
        Some((start, len)) => Ok(Arc {
            center: p,
            radius: r,
            psi_start: wrap_angle(start),
            psi_end: wrap_angle(start + len),
        }),
        None => Err(GeometryError::NoInteriorArc { radius: r }),
    }
}
