use super::{Point, Polygon, BOUNDARY_EPS};

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// True when closed segments `ab` and `cd` share at least one point.
pub(crate) fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

/// Parameters `(t, u)` of the intersection of `a + t(b-a)` and `c + u(d-c)`,
/// when both lie in `[0, 1]`. Parallel segments yield `None`.
pub fn segment_crossing(a: Point, b: Point, c: Point, d: Point) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    if denom.abs() <= f64::EPSILON * r.norm() * s.norm() {
        return None;
    }
    let qp = c - a;
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some((t, u))
    } else {
        None
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.norm2();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Nearest boundary point to `p`: `(point, edge index, distance)`.
pub fn closest_point_on_boundary(p: Point, poly: &Polygon) -> (Point, usize, f64) {
    let mut best = (poly.vertex(0), 0, f64::INFINITY);
    for (i, (a, b)) in poly.edges().enumerate() {
        let ab = b - a;
        let t = ((p - a).dot(ab) / ab.norm2()).clamp(0.0, 1.0);
        let q = a + ab * t;
        let d = p.dist(q);
        if d < best.2 {
            best = (q, i, d);
        }
    }
    best
}

/// Boundary-inclusive point-in-polygon test (even-odd crossing rule).
pub fn point_in_polygon(p: Point, poly: &Polygon) -> bool {
    let mut inside = false;
    for (a, b) in poly.edges() {
        if point_segment_distance(p, a, b) <= BOUNDARY_EPS {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Signed positions along the full line through `origin` with compass
/// `bearing` where the line crosses the polygon boundary, sorted ascending.
///
/// An edge counts when exactly one endpoint lies strictly on the left side of
/// the line, so a line grazing a vertex yields zero or two crossings and the
/// total is always even. Edges lying on the line are skipped.
pub fn line_crossings(origin: Point, bearing: f64, poly: &Polygon) -> Vec<f64> {
    let (s, c) = bearing.sin_cos();
    let dir = Point::new(s, c);
    let left = Point::new(-c, s);
    let mut out = Vec::new();
    for (a, b) in poly.edges() {
        let (la, lb) = ((a - origin).dot(left), (b - origin).dot(left));
        if (la > 0.0) != (lb > 0.0) {
            let (ta, tb) = ((a - origin).dot(dir), (b - origin).dot(dir));
            let f = la / (la - lb);
            out.push(ta + (tb - ta) * f);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Distances from `origin` along compass `bearing` at which the ray crosses
/// the polygon boundary, sorted nearest first.
pub fn ray_cross_polygon(origin: Point, bearing: f64, poly: &Polygon) -> Vec<f64> {
    line_crossings(origin, bearing, poly)
        .into_iter()
        .filter(|&t| t >= 0.0)
        .collect()
}

/// True when the closed segment `ab` stays inside (or on) the polygon.
pub fn segment_inside_polygon(a: Point, b: Point, poly: &Polygon) -> bool {
    if !point_in_polygon(a, poly) || !point_in_polygon(b, poly) {
        return false;
    }
    let mut ts = vec![0.0, 1.0];
    for (c, d) in poly.edges() {
        if let Some((t, _)) = segment_crossing(a, b, c, d) {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.windows(2)
        .filter(|w| w[1] - w[0] > 1e-12)
        .all(|w| point_in_polygon(a.lerp(b, 0.5 * (w[0] + w[1])), poly))
}
