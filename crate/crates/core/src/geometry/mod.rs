//! Planar geometry shared by the contour follower and the coverage planner.
//!
//! Bearings are compass bearings throughout: `0` points along `+y` (north)
//! and angles grow clockwise, so a bearing `psi` maps to the unit vector
//! `(sin psi, cos psi)`.

mod arc;
mod boundary;
mod io;
mod predicates;
mod simplify;

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub(crate) use arc::arc_span;
pub use arc::{arc_within_polygon, Arc};
pub use boundary::{edge_vertex_ahead, next_edge, trace_boundary, Direction};
pub use io::{format_polygon, parse_polygon, read_polygon_file};
pub use predicates::{
    closest_point_on_boundary, line_crossings, point_in_polygon, point_segment_distance,
    ray_cross_polygon, segment_crossing, segment_inside_polygon,
};
pub use simplify::simplify_closed;

/// Distance under which two vertices are considered coincident.
pub const VERTEX_EPS: f64 = 1e-9;
/// Distance from an edge under which a point counts as on the boundary.
pub const BOUNDARY_EPS: f64 = 1e-9;
/// Snapping tolerance used when locating points on the boundary.
pub const SNAP_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {count}")]
    TooFewVertices { count: usize },
    #[error("vertices {index} and {next} coincide")]
    CoincidentVertices { index: usize, next: usize },
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon is not simple: edge {first} crosses edge {second}")]
    SelfIntersecting { first: usize, second: usize },
    #[error("point ({x}, {y}) is {distance} m from the boundary")]
    NotOnBoundary { x: f64, y: f64, distance: f64 },
    #[error("no bearing at radius {radius} m stays inside the polygon")]
    NoInteriorArc { radius: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

/// A point in the local metric frame (east, north).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dist2(self, other: Point) -> f64 {
        (self - other).norm2()
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        self + (other - self) * t
    }

    /// Rotates counter-clockwise by `angle` radians (mathematical convention).
    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Point at distance `dist` from `self` along compass bearing `bearing`.
    pub fn offset(self, bearing: f64, dist: f64) -> Point {
        let (s, c) = bearing.sin_cos();
        Point::new(self.x + dist * s, self.y + dist * c)
    }

    /// Compass bearing from `self` to `to`.
    pub fn bearing_to(self, to: Point) -> f64 {
        (to.x - self.x).atan2(to.y - self.y)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Smallest absolute angular difference between two bearings, in `[0, pi]`.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

/// A simple polygon without holes, stored counter-clockwise and implicitly
/// closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl Polygon {
    /// Validates and normalizes a vertex ring.
    ///
    /// A repeated closing vertex is dropped and clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() > 1 {
            let (first, last) = (vertices[0], vertices[vertices.len() - 1]);
            if first.dist(last) <= VERTEX_EPS {
                vertices.pop();
            }
        }
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices { count: n });
        }
        if vertices
            .iter()
            .any(|v| !v.x.is_finite() || !v.y.is_finite())
        {
            return Err(GeometryError::ZeroArea);
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i].dist(vertices[j]) <= VERTEX_EPS {
                return Err(GeometryError::CoincidentVertices { index: i, next: j });
            }
        }
        check_simple(&vertices)?;
        let area = signed_area(&vertices);
        let scale = bbox_diagonal(&vertices);
        if area.abs() <= 1e-12 * scale * scale {
            return Err(GeometryError::ZeroArea);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    /// Axis-aligned rectangle with corners `min` and `max`.
    pub fn rectangle(min: Point, max: Point) -> Result<Self, GeometryError> {
        Self::new(vec![
            min,
            Point::new(max.x, min.y),
            max,
            Point::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i % self.vertices.len()]
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).sum()
    }

    pub fn centroid(&self) -> Point {
        let a = self.area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        Point::new(cx / (6.0 * a), cy / (6.0 * a))
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounds(&self) -> (Point, Point) {
        bbox(&self.vertices)
    }

    /// Copy rotated counter-clockwise by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|v| v.rotate(angle)).collect(),
        }
    }
}

fn signed_area(vs: &[Point]) -> f64 {
    let n = vs.len();
    0.5 * (0..n).map(|i| vs[i].cross(vs[(i + 1) % n])).sum::<f64>()
}

fn bbox(vs: &[Point]) -> (Point, Point) {
    let mut min = Point::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for v in vs {
        min.x = min.x.min(v.x);
        min.y = min.y.min(v.y);
        max.x = max.x.max(v.x);
        max.y = max.y.max(v.y);
    }
    (min, max)
}

fn bbox_diagonal(vs: &[Point]) -> f64 {
    let (min, max) = bbox(vs);
    min.dist(max)
}

fn check_simple(vs: &[Point]) -> Result<(), GeometryError> {
    let n = vs.len();
    for i in 0..n {
        let (a, b) = (vs[i], vs[(i + 1) % n]);
        // consecutive edges folding back onto each other
        let c = vs[(i + 2) % n];
        let (u, w) = (b - a, c - b);
        if u.cross(w).abs() <= 1e-12 * u.norm() * w.norm() && u.dot(w) < 0.0 {
            return Err(GeometryError::SelfIntersecting {
                first: i,
                second: (i + 1) % n,
            });
        }
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (vs[j], vs[(j + 1) % n]);
            if predicates::segments_touch(a, b, c, d) {
                return Err(GeometryError::SelfIntersecting {
                    first: i,
                    second: j,
                });
            }
        }
    }
    Ok(())
}
