//! Two-mode controller that finds the target-depth contour on the live depth
//! model and traces its intersection with the bounding polygon.
//!
//! In contour mode the vessel steers toward the bearing, on an arc of radius
//! `r`, whose predicted depth is closest to `z_t`. When that waypoint leaves
//! the polygon it switches to boundary mode and walks polygon vertices until
//! the next vertex is predicted shallower than `z_t`.

mod rose;

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    arc_within_polygon, closest_point_on_boundary, edge_vertex_ahead, next_edge, point_in_polygon,
    segment_crossing, wrap_angle, Direction, GeometryError, Point, Polygon,
};
use crate::gp::{GpError, GpModel};

pub use rose::{rose_bearings, rose_probes, rose_solve, select_bearing, RoseSolution, SPLITS};

#[derive(Debug, Error)]
pub enum ContourError {
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid controller config: {0}")]
    Config(String),
}

/// Position (m) and compass heading (rad, clockwise from north).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self {
            x,
            y,
            psi: wrap_angle(psi),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Contour,
    Boundary,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Contour => "contour",
            Mode::Boundary => "boundary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FfcbConfig {
    /// Target depth (m).
    pub z_t: f64,
    /// Search radius (m).
    pub r: f64,
    /// Most recent traced points ignored by the closure test.
    pub loop_buffer: usize,
    /// Half-width of the contour-mode search arc (rad).
    pub psi_adj: f64,
    /// Measured depth within this of `z_t` counts as reaching the contour (m).
    pub epsilon_depth: f64,
    /// Heading smoothing half-life (s).
    pub ema_half_life: f64,
    /// Closure distance for the loop test (m); `None` means `1.5·r`.
    pub closure_radius: Option<f64>,
}

impl Default for FfcbConfig {
    fn default() -> Self {
        Self {
            z_t: 4.5,
            r: 5.0,
            loop_buffer: 50,
            psi_adj: FRAC_PI_2,
            epsilon_depth: 0.25,
            ema_half_life: 5.0,
            closure_radius: None,
        }
    }
}

impl FfcbConfig {
    pub fn validate(&self) -> Result<(), ContourError> {
        let bad = |m: &str| Err(ContourError::Config(m.to_string()));
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad("r must be positive");
        }
        if !(self.psi_adj > 0.0 && self.psi_adj <= PI) {
            return bad("psi_adj must lie in (0, pi]");
        }
        if !(self.ema_half_life > 0.0) {
            return bad("ema_half_life must be positive");
        }
        if !(self.epsilon_depth >= 0.0) || !self.z_t.is_finite() {
            return bad("z_t and epsilon_depth must be finite, epsilon_depth non-negative");
        }
        if matches!(self.closure_radius, Some(c) if !(c > 0.0)) {
            return bad("closure_radius must be positive");
        }
        Ok(())
    }

    pub fn closure_radius(&self) -> f64 {
        self.closure_radius.unwrap_or(1.5 * self.r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfcbState {
    pub mode: Mode,
    /// Boundary travel direction, latched on the first boundary contact.
    pub b: Option<Direction>,
    pub edge: usize,
    pub found_contour: bool,
    pub b_cont: Vec<Point>,
    /// Smoothed heading; `None` until the first step.
    pub psi_ema: Option<f64>,
    /// Number of mode switches so far.
    pub transitions: usize,
}

impl Default for FfcbState {
    fn default() -> Self {
        Self::new()
    }
}

impl FfcbState {
    pub fn new() -> Self {
        Self {
            mode: Mode::Contour,
            b: None,
            edge: 0,
            found_contour: false,
            b_cont: Vec::new(),
            psi_ema: None,
            transitions: 0,
        }
    }
}

/// What one control tick decided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// Desired heading (compass, rad).
    pub psi_d: f64,
    pub waypoint: Point,
    pub mode: Mode,
    /// Predicted depth under the vessel.
    pub z_predicted: f64,
    pub switched: bool,
}

/// Circular exponential moving average of headings.
pub fn ema_heading(psi_prev_ema: f64, psi_new: f64, dt: f64, half_life: f64) -> f64 {
    let w = 1.0 - (-dt / half_life).exp2();
    let (sp, cp) = psi_prev_ema.sin_cos();
    let (sn, cn) = psi_new.sin_cos();
    let (vx, vy) = ((1.0 - w) * sp + w * sn, (1.0 - w) * cp + w * cn);
    if vx.hypot(vy) < 1e-12 {
        return wrap_angle(psi_new);
    }
    wrap_angle(vx.atan2(vy))
}

/// True when `pose` is within `closure_radius` of a traced point other than
/// the `loop_buffer` most recent ones.
pub fn boundary_complete(
    b_cont: &[Point],
    pose: &Pose,
    loop_buffer: usize,
    closure_radius: f64,
) -> bool {
    let eligible = b_cont.len().saturating_sub(loop_buffer);
    let p = pose.position();
    b_cont[..eligible]
        .iter()
        .any(|q| q.dist(p) <= closure_radius)
}

/// Edge through which the segment `from → to` first leaves the polygon.
fn exit_edge(from: Point, to: Point, poly: &Polygon) -> usize {
    let d = to - from;
    let mut best: Option<(usize, f64)> = None;
    for (i, (a, b)) in poly.edges().enumerate() {
        let e = b - a;
        // outward normal of a counter-clockwise edge points right
        if d.dot(Point::new(e.y, -e.x)) <= 0.0 {
            continue;
        }
        if let Some((t, _)) = segment_crossing(from, to, a, b) {
            if best.is_none_or(|(_, bt)| t < bt) {
                best = Some((i, t));
            }
        }
    }
    best.map_or_else(|| closest_point_on_boundary(to, poly).1, |(i, _)| i)
}

/// Runs one control tick of the contour/boundary controller.
///
/// `z_measured` is the sonar depth under the vessel this tick and `dt` the
/// time since the previous tick. On error the state is left untouched.
pub fn ffcb_step(
    state: &mut FfcbState,
    pose: &Pose,
    z_measured: f64,
    dt: f64,
    model: &GpModel,
    poly: &Polygon,
    cfg: &FfcbConfig,
) -> Result<StepOutput, ContourError> {
    let mut pos = pose.position();
    if !point_in_polygon(pos, poly) {
        let (q, _, d) = closest_point_on_boundary(pos, poly);
        log::warn!("pose {pos} is {d:.3} m outside the polygon; clamping to {q}");
        pos = q;
    }
    let mut psi_ema = match state.psi_ema {
        Some(prev) => ema_heading(prev, pose.psi, dt, cfg.ema_half_life),
        None => pose.psi,
    };

    let mut next = Next {
        mode: state.mode,
        b: state.b,
        edge: state.edge,
    };
    let (waypoint, z_predicted) = match state.mode {
        Mode::Contour => {
            let bearings = rose_bearings(psi_ema - cfg.psi_adj, psi_ema + cfg.psi_adj);
            let mut probes = rose_probes(pos, cfg.r, &bearings);
            probes.push(pos);
            let depths = model.predict_mean(&probes)?;
            let (bearing, _) =
                select_bearing(&bearings, &depths[..bearings.len()], cfg.z_t, pose.psi);
            let wp = pos.offset(bearing, cfg.r);
            let z_here = depths[bearings.len()];
            if point_in_polygon(wp, poly) {
                (wp, z_here)
            } else {
                next.mode = Mode::Boundary;
                next.edge = exit_edge(pos, wp, poly);
                let dir = match next.b {
                    Some(d) => d,
                    None => set_direction(model, poly, next.edge)?,
                };
                next.b = Some(dir);
                (edge_vertex_ahead(poly, next.edge, dir), z_here)
            }
        }
        Mode::Boundary => {
            let dir = state.b.unwrap_or(Direction::Ccw);
            let mut vertex = edge_vertex_ahead(poly, next.edge, dir);
            if vertex.dist(pos) < cfg.r {
                next.edge = next_edge(poly, next.edge, dir);
                vertex = edge_vertex_ahead(poly, next.edge, dir);
            }
            // the leave-boundary arc is queried speculatively in the same batch
            let arc = arc_within_polygon(pos, poly, cfg.r);
            let bearings = match &arc {
                Ok(a) => rose_bearings(a.psi_start, a.psi_end),
                Err(_) => Vec::new(),
            };
            let mut probes = rose_probes(pos, cfg.r, &bearings);
            probes.push(vertex);
            probes.push(pos);
            let depths = model.predict_mean(&probes)?;
            let k = bearings.len();
            let (z_vertex, z_here) = (depths[k], depths[k + 1]);
            if z_vertex > cfg.z_t {
                (vertex, z_here)
            } else {
                arc?;
                next.mode = Mode::Contour;
                let (bearing, _) = select_bearing(&bearings, &depths[..k], cfg.z_t, pose.psi);
                // a deliberate turn off the boundary, not a disturbance to smooth
                psi_ema = bearing;
                (pos.offset(bearing, cfg.r), z_here)
            }
        }
    };

    let switched = next.mode != state.mode;
    state.mode = next.mode;
    state.b = next.b;
    state.edge = next.edge;
    state.psi_ema = Some(psi_ema);
    if switched {
        state.transitions += 1;
    }
    if !state.found_contour
        && (state.mode == Mode::Boundary || (z_measured - cfg.z_t).abs() < cfg.epsilon_depth)
    {
        state.found_contour = true;
    }
    if state.found_contour {
        state.b_cont.push(pose.position());
    }
    Ok(StepOutput {
        psi_d: pos.bearing_to(waypoint),
        waypoint,
        mode: state.mode,
        z_predicted,
        switched,
    })
}

struct Next {
    mode: Mode,
    b: Option<Direction>,
    edge: usize,
}

/// Heads toward the endpoint of `edge` predicted deeper; ties go counter-clockwise.
fn set_direction(model: &GpModel, poly: &Polygon, edge: usize) -> Result<Direction, GpError> {
    let ccw = edge_vertex_ahead(poly, edge, Direction::Ccw);
    let cw = edge_vertex_ahead(poly, edge, Direction::Cw);
    let z = model.predict_mean(&[ccw, cw])?;
    Ok(if z[1] > z[0] {
        Direction::Cw
    } else {
        Direction::Ccw
    })
}

/// One row of the controller trace log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub mode: Mode,
    pub z_measured: f64,
    pub z_predicted: f64,
    pub found_contour: bool,
}

pub fn write_trace_csv<W: Write>(mut w: W, rows: &[TraceRow]) -> std::io::Result<()> {
    writeln!(w, "t,x,y,psi,mode,z_measured,z_predicted,found_contour")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.x,
            r.y,
            r.psi,
            r.mode.as_str(),
            r.z_measured,
            r.z_predicted,
            r.found_contour
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::HyperParams;
    use std::f64::consts::FRAC_PI_4;

    /// Near-exact plane model `z = gx·x + gy·y + c` from a dense grid.
    fn plane_model(gx: f64, gy: f64, c: f64, lo: f64, hi: f64) -> GpModel {
        let h = HyperParams::new(400.0, 1e-6, 60.0).unwrap();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let n = 15;
        for i in 0..n {
            for j in 0..n {
                let p = Point::new(
                    lo + (hi - lo) * i as f64 / (n - 1) as f64,
                    lo + (hi - lo) * j as f64 / (n - 1) as f64,
                );
                xs.push(p);
                ys.push(gx * p.x + gy * p.y + c);
            }
        }
        GpModel::fit(h, &xs, &ys).unwrap()
    }

    #[test]
    fn rose_on_plane_finds_intersection() {
        // z = 0.1·y; with r ≥ 30 the circle reaches z = 3 at cos b = 30/r
        for r in [35.0, 50.0, 70.0] {
            let depths =
                |bs: &[f64]| -> Vec<f64> { bs.iter().map(|b| 0.1 * r * b.cos()).collect() };
            let bs = rose_bearings(-PI, PI);
            let (b, e) = select_bearing(&bs, &depths(&bs), 3.0, 0.3);
            let expect = (30.0 / r).acos();
            assert_eq!(e, 0.0);
            assert!((b - expect).abs() < 0.05, "r={r}: {b} vs {expect}");
            let (b2, _) = select_bearing(&bs, &depths(&bs), 3.0, -0.3);
            assert!((b2 + expect).abs() < 0.05);
        }
        let r = 20.0;
        let bs = rose_bearings(-PI, PI);
        let z: Vec<f64> = bs.iter().map(|b| 0.1 * r * b.cos()).collect();
        let (b, e) = select_bearing(&bs, &z, 3.0, 1.0);
        assert!(b.abs() < 1e-12);
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rose_with_model_matches_plane() {
        let m = plane_model(0.0, 0.1, 0.0, -60.0, 60.0);
        let s = rose_solve(&m, 3.0, 0.0, Point::new(0.0, 0.0), 50.0, -PI, PI).unwrap();
        assert!(
            (s.bearing.abs() - 0.6_f64.acos()).abs() < 0.05,
            "{}",
            s.bearing
        );
        assert!((0.1 * s.waypoint.y - 3.0).abs() < 0.1);
    }

    #[test]
    fn uniform_depth_ties_to_heading() {
        let bs = rose_bearings(-1.0, 1.0);
        let z = vec![4.5; bs.len()];
        for psi in [0.0, 0.37, -0.9] {
            let (b, e) = select_bearing(&bs, &z, 4.5, psi);
            assert_eq!(e, 0.0);
            assert!((b - psi).abs() < 1e-12);
        }
    }

    #[test]
    fn bearings_cover_arc() {
        let bs = rose_bearings(3.0, -3.0);
        assert_eq!(bs.len(), SPLITS + 1);
        assert!((bs[SPLITS] - bs[0] - (2.0 * PI - 6.0)).abs() < 1e-12);
    }

    #[test]
    fn ema_examples() {
        assert!((ema_heading(1.2, 1.2, 1.0, 5.0) - 1.2).abs() < 1e-15);
        assert!((ema_heading(0.0, FRAC_PI_2, 5.0, 5.0) - FRAC_PI_4).abs() < 1e-12);
        // wraps through south without sweeping past north
        let e = ema_heading(PI - 0.1, -PI + 0.1, 5.0, 5.0);
        assert!((e.abs() - PI).abs() < 1e-12);
        // 20 half-lives shrink a small offset by 2^-20
        for dt in [1.0, 5.0] {
            let mut psi = 0.0;
            for _ in 0..(100.0 / dt) as usize {
                psi = ema_heading(psi, 0.5, dt, 5.0);
            }
            assert!((psi - 0.5).abs() < 1e-6, "{}", (psi - 0.5).abs());
            assert!((psi - 0.5).abs() <= 0.5 * 2f64.powi(-20) * 1.1);
        }
    }

    #[test]
    fn closure_examples() {
        let pose = Pose::new(0.0, 0.0, 0.0);
        let short: Vec<Point> = (0..10).map(|i| Point::new(0.0, i as f64)).collect();
        assert!(!boundary_complete(&short, &pose, 10, 100.0));
        assert!(!boundary_complete(&short, &pose, 20, 100.0));
        assert!(boundary_complete(&short, &pose, 9, 0.0));
        assert!(!boundary_complete(&[], &pose, 0, 1.0));
    }

    #[test]
    fn closure_on_circle_needs_half_loop() {
        // circumference 200 m sampled every 1 m; buffer is half the loop
        let radius = 100.0 / PI;
        let pts: Vec<Point> = (0..400)
            .map(|i| Point::new(0.0, 0.0).offset(i as f64 / radius, radius))
            .collect();
        let buffer = 100;
        let close = 1.5;
        let first = (1..pts.len())
            .find(|&k| {
                let p = pts[k];
                boundary_complete(&pts[..=k], &Pose::new(p.x, p.y, 0.0), buffer, close)
            })
            .unwrap();
        assert!(first > buffer);
        assert!((199..=200).contains(&first), "closed at {first}");
    }

    #[test]
    fn exits_to_boundary_toward_vertex() {
        let poly = Polygon::rectangle(Point::new(0.0, 0.0), Point::new(100.0, 100.0)).unwrap();
        // deeper toward the east; contour at x = 50 runs north–south
        let m = plane_model(0.1, 0.0, 0.0, -10.0, 110.0);
        let cfg = FfcbConfig {
            z_t: 5.0,
            ..FfcbConfig::default()
        };
        let mut st = FfcbState::new();
        let pose = Pose::new(50.0, 97.0, 0.0);
        let out = ffcb_step(&mut st, &pose, 5.0, 1.0, &m, &poly, &cfg).unwrap();
        assert_eq!(out.mode, Mode::Boundary);
        assert!(out.switched);
        assert_eq!(st.edge, 2);
        // the top edge runs (100,100)→(0,100); its deeper end is east
        assert_eq!(st.b, Some(Direction::Cw));
        assert_eq!(out.waypoint, Point::new(100.0, 100.0));
        assert!(st.found_contour);
        assert_eq!(st.b_cont.len(), 1);
    }

    #[test]
    fn leaves_boundary_when_vertex_shallow() {
        let poly = Polygon::rectangle(Point::new(0.0, 0.0), Point::new(100.0, 100.0)).unwrap();
        let m = plane_model(-0.1, 0.0, 10.0, -10.0, 110.0); // deeper to the west
        let cfg = FfcbConfig {
            z_t: 5.0,
            ..FfcbConfig::default()
        };
        let mut st = FfcbState {
            mode: Mode::Boundary,
            b: Some(Direction::Ccw),
            edge: 0,
            found_contour: true,
            ..FfcbState::new()
        };
        // bottom edge heads east to (100,0), which is shallow
        let pose = Pose::new(45.0, 0.0, FRAC_PI_2);
        let out = ffcb_step(&mut st, &pose, 5.5, 1.0, &m, &poly, &cfg).unwrap();
        assert_eq!(out.mode, Mode::Contour);
        assert!(point_in_polygon(out.waypoint, &poly));
        assert!((out.waypoint.x - 50.0).abs() < 0.2, "{}", out.waypoint);
        // smoothing restarts from the new heading
        assert!((st.psi_ema.unwrap() - out.psi_d).abs() < 1e-12);
    }

    #[test]
    fn follows_plane_toward_contour() {
        let poly = Polygon::rectangle(Point::new(0.0, 0.0), Point::new(200.0, 200.0)).unwrap();
        // deepening south: z = 0.05·(200 − y), contour z = 4.5 at y = 110
        let m = plane_model(0.0, -0.05, 10.0, -10.0, 210.0);
        let cfg = FfcbConfig::default();
        let mut st = FfcbState::new();
        let mut pose = Pose::new(100.0, 180.0, PI);
        for _ in 0..150 {
            let z = 10.0 - 0.05 * pose.y;
            let out = ffcb_step(&mut st, &pose, z, 1.0, &m, &poly, &cfg).unwrap();
            assert_eq!(out.mode, Mode::Contour);
            if (z - cfg.z_t).abs() > 0.3 {
                assert!(angular_distance_to_south(out.psi_d) <= cfg.psi_adj + 1e-9);
                assert!(angular_distance_to_south(out.psi_d) < 1e-6);
            }
            let p = pose.position().offset(out.psi_d, 1.0);
            pose = Pose::new(p.x, p.y, out.psi_d);
        }
        assert!(st.found_contour);
        assert!((10.0 - 0.05 * pose.y - cfg.z_t).abs() <= 0.05 * cfg.r);
    }

    fn angular_distance_to_south(psi: f64) -> f64 {
        crate::geometry::angular_distance(psi, PI)
    }

    #[test]
    fn trace_csv_header() {
        let mut buf = Vec::new();
        let row = TraceRow {
            t: 1.0,
            x: 2.0,
            y: 3.0,
            psi: 0.5,
            mode: Mode::Boundary,
            z_measured: 4.0,
            z_predicted: 4.1,
            found_contour: true,
        };
        write_trace_csv(&mut buf, &[row]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "1,2,3,0.5,boundary,4,4.1,true");
    }
}
