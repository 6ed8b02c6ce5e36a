//! Coverage planning inside the traced intersection polygon.
//!
//! The polygon is cut into cells monotone to the sweep direction whose
//! tracklines all sit on one δ grid, so neighbouring tracks are exactly δ
//! apart even across cell interfaces. Cells are visited greedily: transit to
//! the nearest remaining shrunk corner (straight if possible, else A* on a δ
//! grid), then lawnmower the cell from that corner.

mod dmpp;
mod export;
mod transit;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    closest_point_on_boundary, point_in_polygon, segment_inside_polygon, simplify_closed,
    GeometryError, Point, Polygon,
};

pub use dmpp::{dmpp, shrink_corners, Cell, Partition, SweepRecord, Track};
pub use export::{cells_geojson, line_geojson, plan_geojson, write_plan_csv};
pub use transit::{gen_waypoints, plan_transit, TransitPlanner};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(
        "track width {0} must be positive and smaller than the polygon extent along the sweep"
    )]
    InvalidDelta(f64),
    #[error("sweep direction {0} rad outside [-pi/2, pi/2)")]
    SweepDirection(f64),
    #[error(
        "no route from ({x:.3}, {y:.3}) to any remaining cell; track width too large for a neck?"
    )]
    Unreachable { x: f64, y: f64 },
    #[error("no transit targets")]
    NoTargets,
    #[error("traced boundary has too few points ({0}) to form a polygon")]
    ShortTrace(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentLabel {
    Start,
    Transit,
    Lawnmower,
}

impl SegmentLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentLabel::Start => "start",
            SegmentLabel::Transit => "transit",
            SegmentLabel::Lawnmower => "lawnmower",
        }
    }
}

/// A waypoint labelled by the kind of segment that arrives at it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub p: Point,
    pub label: SegmentLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellVisit {
    pub cell: usize,
    pub entry_corner: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub waypoints: Vec<Waypoint>,
    pub total_length: f64,
    pub transit_length: f64,
    pub visits: Vec<CellVisit>,
    pub partition: Partition,
}

impl PathPlan {
    pub fn points(&self) -> Vec<Point> {
        self.waypoints.iter().map(|w| w.p).collect()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.partition.cells
    }

    /// Tracklines in visiting order.
    pub fn tracks(&self) -> Vec<Track> {
        self.visits
            .iter()
            .flat_map(|v| self.partition.cells[v.cell].tracks.iter().copied())
            .collect()
    }
}

/// Boustrophedon legs `(from, to)` over a cell's tracklines starting at
/// shrunk corner `entry_corner`; even legs run along tracks, odd legs join
/// consecutive tracks.
fn lawnmower_legs(cell: &Cell, entry_corner: usize) -> Vec<(Point, Point)> {
    let mut tracks: Vec<Track> = cell.tracks.clone();
    if entry_corner >= 2 {
        tracks.reverse();
    }
    let mut upward = matches!(entry_corner, 0 | 3);
    let mut legs = Vec::new();
    for t in &tracks {
        let (a, b) = if upward { (t.lo, t.hi) } else { (t.hi, t.lo) };
        if let Some(&(_, prev)) = legs.last() {
            legs.push((prev, a));
        }
        legs.push((a, b));
        upward = !upward;
    }
    legs
}

/// Boustrophedon path over a cell's tracklines starting at shrunk corner
/// `entry_corner` (0 bottom-left, 1 top-left, 2 top-right, 3 bottom-right).
/// The first point is the entry corner, the last the far end of the final
/// trackline; consecutive points are at most `delta` apart.
pub fn lawnmower_cell(cell: &Cell, entry_corner: usize, delta: f64) -> Vec<Point> {
    let legs = lawnmower_legs(cell, entry_corner);
    let Some(&(first, _)) = legs.first() else {
        return Vec::new();
    };
    let mut out = vec![first];
    for (a, b) in legs {
        out.extend(gen_waypoints(a, b, delta));
    }
    out
}

/// Full coverage plan: greedy nearest-corner cell order with transits and
/// per-cell lawnmowers. `start` outside the polygon is first snapped onto it.
pub fn plan_coverage(
    poly: &Polygon,
    start: Point,
    delta: f64,
    psi_sd: f64,
) -> Result<PathPlan, CoverageError> {
    let partition = dmpp(poly, delta, psi_sd)?;
    let planner = TransitPlanner::new(poly, delta, psi_sd);
    let mut pos = start;
    if !point_in_polygon(pos, poly) {
        let (q, _, d) = closest_point_on_boundary(pos, poly);
        log::warn!("coverage start {pos} is {d:.3} m outside the polygon; starting from {q}");
        pos = q;
    }
    let mut waypoints = vec![Waypoint {
        p: pos,
        label: SegmentLabel::Start,
    }];
    let mut remaining: Vec<usize> = partition
        .cells
        .iter()
        .filter(|c| !c.tracks.is_empty())
        .map(|c| c.index)
        .collect();
    let mut visits = Vec::new();
    while !remaining.is_empty() {
        let targets: Vec<Point> = remaining
            .iter()
            .flat_map(|&c| {
                partition.cells[c]
                    .shrunk_corners()
                    .expect("cell has tracks")
            })
            .collect();
        let (path, k) = planner.route(pos, &targets)?;
        push(&mut waypoints, &path, SegmentLabel::Transit);
        let cell = remaining.remove(k / 4);
        let entry_corner = k % 4;
        visits.push(CellVisit { cell, entry_corner });
        let mut prev = targets[k];
        for (a, b) in lawnmower_legs(&partition.cells[cell], entry_corner) {
            // joins that would leave the polygon are routed around
            if segment_inside_polygon(a, b, poly) {
                push(
                    &mut waypoints,
                    &gen_waypoints(a, b, delta),
                    SegmentLabel::Lawnmower,
                );
            } else {
                let (detour, _) = planner.route(a, &[b])?;
                push(&mut waypoints, &detour, SegmentLabel::Transit);
            }
            prev = b;
        }
        pos = prev;
    }
    let mut total_length = 0.0;
    let mut transit_length = 0.0;
    for w in waypoints.windows(2) {
        let d = w[0].p.dist(w[1].p);
        total_length += d;
        if w[1].label == SegmentLabel::Transit {
            transit_length += d;
        }
    }
    Ok(PathPlan {
        waypoints,
        total_length,
        transit_length,
        visits,
        partition,
    })
}

fn push(out: &mut Vec<Waypoint>, pts: &[Point], label: SegmentLabel) {
    out.extend(pts.iter().map(|&p| Waypoint { p, label }));
}

/// Turns a traced loop into a simple polygon: the trace is cut where it
/// closes on itself (the earliest point within `closure_radius` of its end
/// that is at least `loop_buffer` points back), then simplified with
/// Douglas-Peucker at `delta / 4`, coarsening if the result self-intersects.
pub fn polygon_from_trace(
    trace: &[Point],
    loop_buffer: usize,
    closure_radius: f64,
    delta: f64,
) -> Result<Polygon, CoverageError> {
    if trace.len() < 3 {
        return Err(CoverageError::ShortTrace(trace.len()));
    }
    let end = *trace.last().expect("non-empty");
    let eligible = trace.len().saturating_sub(loop_buffer.max(1));
    let cut = trace[..eligible]
        .iter()
        .position(|p| p.dist(end) <= closure_radius)
        .unwrap_or(0);
    let ring = &trace[cut..];
    let mut last_err = GeometryError::TooFewVertices { count: ring.len() };
    for tol in [0.25 * delta, 0.5 * delta, delta] {
        match Polygon::new(simplify_closed(ring, tol)) {
            Ok(p) => return Ok(p),
            Err(e) => {
                log::warn!("simplified trace at tolerance {tol}: {e}");
                last_err = e;
            }
        }
    }
    Err(last_err.into())
}
