use serde::{Deserialize, Serialize};

use super::{GeometryError, Point, Polygon, SNAP_EPS, VERTEX_EPS};

/// Direction of travel along the (counter-clockwise) polygon boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Ccw,
    Cw,
}

impl Direction {
    pub fn sign(self) -> isize {
        match self {
            Direction::Ccw => 1,
            Direction::Cw => -1,
        }
    }
}

/// Index of the edge after `edge` when travelling in `dir`.
pub fn next_edge(poly: &Polygon, edge: usize, dir: Direction) -> usize {
    let n = poly.len() as isize;
    (edge as isize + dir.sign()).rem_euclid(n) as usize
}

/// Endpoint of `edge` that lies ahead in travel direction `dir`.
pub fn edge_vertex_ahead(poly: &Polygon, edge: usize, dir: Direction) -> Point {
    match dir {
        Direction::Ccw => poly.vertex(edge + 1),
        Direction::Cw => poly.vertex(edge),
    }
}

/// Edge index and edge parameter in `[0, 1)` of a boundary point.
fn locate(p: Point, poly: &Polygon) -> Result<(usize, f64), GeometryError> {
    let n = poly.len();
    let mut best = (0, 0.0, f64::INFINITY);
    for (i, (a, b)) in poly.edges().enumerate() {
        let ab = b - a;
        let t = ((p - a).dot(ab) / ab.norm2()).clamp(0.0, 1.0);
        let d = p.dist(a + ab * t);
        if d < best.2 {
            best = (i, t, d);
        }
    }
    let (mut edge, mut t, d) = best;
    if d > SNAP_EPS {
        return Err(GeometryError::NotOnBoundary {
            x: p.x,
            y: p.y,
            distance: d,
        });
    }
    let (a, b) = poly.edge(edge);
    if p.dist(b) <= VERTEX_EPS {
        edge = (edge + 1) % n;
        t = 0.0;
    } else if p.dist(a) <= VERTEX_EPS {
        t = 0.0;
    }
    Ok((edge, t))
}

/// Polygon vertices met when walking the boundary counter-clockwise from
/// `from` to `to`, excluding the two endpoints themselves.
pub fn trace_boundary(from: Point, to: Point, poly: &Polygon) -> Result<Vec<Point>, GeometryError> {
    let n = poly.len();
    let (ef, tf) = locate(from, poly)?;
    let (et, tt) = locate(to, poly)?;
    if ef == et && tt >= tf {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut k = (ef + 1) % n;
    loop {
        out.push(poly.vertex(k));
        if k == et {
            break;
        }
        k = (k + 1) % n;
    }
    if tt == 0.0 {
        out.pop();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Polygon {
        Polygon::rectangle(Point::new(0.0, 0.0), Point::new(2.0, 2.0)).unwrap()
    }

    #[test]
    fn same_edge_is_empty() {
        let sq = square();
        let v = trace_boundary(Point::new(0.5, 0.0), Point::new(1.5, 0.0), &sq).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn adjacent_edges_give_shared_corner() {
        let sq = square();
        let v = trace_boundary(Point::new(1.0, 0.0), Point::new(2.0, 1.0), &sq).unwrap();
        assert_eq!(v, vec![Point::new(2.0, 0.0)]);
    }

    #[test]
    fn opposite_midpoints_ccw() {
        let sq = square();
        let v = trace_boundary(Point::new(1.0, 0.0), Point::new(1.0, 2.0), &sq).unwrap();
        assert_eq!(v, vec![Point::new(2.0, 0.0), Point::new(2.0, 2.0)]);
        let back = trace_boundary(Point::new(1.0, 2.0), Point::new(1.0, 0.0), &sq).unwrap();
        assert_eq!(back, vec![Point::new(0.0, 2.0), Point::new(0.0, 0.0)]);
    }

    #[test]
    fn vertex_endpoints_excluded() {
        let sq = square();
        let v = trace_boundary(Point::new(2.0, 0.0), Point::new(0.0, 2.0), &sq).unwrap();
        assert_eq!(v, vec![Point::new(2.0, 2.0)]);
        // backwards on the same edge wraps the whole ring
        let all = trace_boundary(Point::new(1.5, 0.0), Point::new(0.5, 0.0), &sq).unwrap();
        assert_eq!(all.len(), 4);
    }

    #[test]
    fn off_boundary_rejected() {
        let sq = square();
        assert!(matches!(
            trace_boundary(Point::new(1.0, 1.0), Point::new(1.0, 0.0), &sq),
            Err(GeometryError::NotOnBoundary { .. })
        ));
        // within the snap tolerance is fine
        assert!(trace_boundary(Point::new(1.0, 5e-7), Point::new(1.0, 2.0), &sq).is_ok());
    }

    #[test]
    fn edge_navigation_wraps() {
        let sq = square();
        assert_eq!(next_edge(&sq, 3, Direction::Ccw), 0);
        assert_eq!(next_edge(&sq, 0, Direction::Cw), 3);
        let mut seen = [0usize; 4];
        let mut e = 0;
        for _ in 0..4 {
            seen[e] += 1;
            e = next_edge(&sq, e, Direction::Ccw);
        }
        assert_eq!(seen, [1, 1, 1, 1]);
        assert_eq!(edge_vertex_ahead(&sq, 0, Direction::Ccw), sq.vertex(1));
        assert_eq!(edge_vertex_ahead(&sq, 0, Direction::Cw), sq.vertex(0));
    }
}
