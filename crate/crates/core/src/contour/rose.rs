use crate::geometry::{angular_distance, Point};
use crate::gp::{GpError, GpModel};

/// Number of equal intervals the search arc is cut into.
pub const SPLITS: usize = 50;

/// Winning bearing of a rose search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoseSolution {
    pub waypoint: Point,
    pub bearing: f64,
    /// `|z − z_t|` of the interpolated candidate; zero when the arc attains `z_t`.
    pub depth_error: f64,
}

/// The `SPLITS + 1` bearings from `psi_s` clockwise to `psi_e`.
pub fn rose_bearings(psi_s: f64, psi_e: f64) -> Vec<f64> {
    let span = crate::geometry::arc_span(psi_s, psi_e);
    let step = span / SPLITS as f64;
    (0..=SPLITS).map(|i| psi_s + step * i as f64).collect()
}

pub fn rose_probes(pos: Point, r: f64, bearings: &[f64]) -> Vec<Point> {
    bearings.iter().map(|&b| pos.offset(b, r)).collect()
}

/// Best candidate in the bearing interval `[a, b]` with end depths `za`, `zb`.
fn best_heading(a: f64, b: f64, za: f64, zb: f64, z_t: f64, psi: f64) -> (f64, f64) {
    let (lo, hi) = (za.min(zb), za.max(zb));
    if lo <= z_t && z_t <= hi {
        if za == zb {
            // flat at the target: any bearing in the interval is exact
            let off = (psi - a).rem_euclid(std::f64::consts::TAU);
            let c = if off <= b - a {
                a + off
            } else if angular_distance(a, psi) <= angular_distance(b, psi) {
                a
            } else {
                b
            };
            return (c, 0.0);
        }
        let t = (z_t - za) / (zb - za);
        return (a + (b - a) * t, 0.0);
    }
    let (ea, eb) = ((za - z_t).abs(), (zb - z_t).abs());
    if ea < eb || (ea == eb && angular_distance(a, psi) <= angular_distance(b, psi)) {
        (a, ea)
    } else {
        (b, eb)
    }
}

/// Selects the bearing from depths already predicted at `bearings`.
///
/// Adjacent pairs are linearly interpolated for `z_t`; candidates rank by
/// depth error, then by angular distance to `psi`.
pub fn select_bearing(bearings: &[f64], depths: &[f64], z_t: f64, psi: f64) -> (f64, f64) {
    assert_eq!(bearings.len(), depths.len());
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..bearings.len().saturating_sub(1) {
        let (b, err) = best_heading(
            bearings[i],
            bearings[i + 1],
            depths[i],
            depths[i + 1],
            z_t,
            psi,
        );
        let d = angular_distance(b, psi);
        let better = match best {
            None => true,
            Some((_, e, bd)) => err < e || (err == e && d < bd),
        };
        if better {
            best = Some((b, err, d));
        }
    }
    let (b, e, _) = best.expect("at least two bearings");
    (crate::geometry::wrap_angle(b), e)
}

/// Searches the arc `[psi_s, psi_e]` of radius `r` about `pos` for the
/// bearing whose predicted depth is closest to `z_t`.
pub fn rose_solve(
    model: &GpModel,
    z_t: f64,
    psi: f64,
    pos: Point,
    r: f64,
    psi_s: f64,
    psi_e: f64,
) -> Result<RoseSolution, GpError> {
    let bearings = rose_bearings(psi_s, psi_e);
    let depths = model.predict_mean(&rose_probes(pos, r, &bearings))?;
    let (bearing, depth_error) = select_bearing(&bearings, &depths, z_t, psi);
    Ok(RoseSolution {
        waypoint: pos.offset(bearing, r),
        bearing,
        depth_error,
    })
}
