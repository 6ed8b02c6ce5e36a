use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::dmpp::Frame;
use super::CoverageError;
use crate::geometry::{point_in_polygon, segment_inside_polygon, Point, Polygon};

/// Points from `a` (exclusive) to `b` (inclusive) at most `delta` apart.
pub fn gen_waypoints(a: Point, b: Point, delta: f64) -> Vec<Point> {
    let len = a.dist(b);
    if len == 0.0 {
        return Vec::new();
    }
    let n = ((len / delta) - 1e-9).ceil().max(1.0) as usize;
    (1..=n)
        .map(|k| {
            if k == n {
                b
            } else {
                a.lerp(b, k as f64 / n as f64)
            }
        })
        .collect()
}

pub(crate) fn path_length(start: Point, path: &[Point]) -> f64 {
    let mut prev = start;
    let mut len = 0.0;
    for &p in path {
        len += prev.dist(p);
        prev = p;
    }
    len
}

#[derive(Clone, Copy)]
struct Open {
    f: f64,
    node: usize,
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Open {}
impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// 8-connected δ grid over the polygon, axis-aligned in the sweep frame.
/// Nodes are kept only inside the polygon and edges only where the segment
/// stays inside.
#[derive(Debug, Clone)]
pub struct TransitPlanner {
    poly: Polygon,
    delta: f64,
    nodes: Vec<Point>,
    cells: HashMap<(i64, i64), usize>,
    origin: Point,
    frame_angle: f64,
    adj: Vec<Vec<(usize, f64)>>,
}

impl TransitPlanner {
    pub fn new(poly: &Polygon, delta: f64, psi_sd: f64) -> Self {
        let frame = Frame { psi_sd };
        let (min, max) = poly.rotated(-psi_sd).bounds();
        let (nx, ny) = (
            ((max.x - min.x) / delta).floor() as i64,
            ((max.y - min.y) / delta).floor() as i64,
        );
        let mut nodes = Vec::new();
        let mut keys = Vec::new();
        let mut cells = HashMap::new();
        for i in 0..=nx {
            for j in 0..=ny {
                let p = frame.to_world(Point::new(
                    min.x + delta * i as f64,
                    min.y + delta * j as f64,
                ));
                if point_in_polygon(p, poly) {
                    cells.insert((i, j), nodes.len());
                    keys.push((i, j));
                    nodes.push(p);
                }
            }
        }
        let mut adj = vec![Vec::new(); nodes.len()];
        for (a, &(i, j)) in keys.iter().enumerate() {
            for (di, dj) in [(1, 0), (0, 1), (1, 1), (1, -1)] {
                if let Some(&b) = cells.get(&(i + di, j + dj)) {
                    if segment_inside_polygon(nodes[a], nodes[b], poly) {
                        let w = nodes[a].dist(nodes[b]);
                        adj[a].push((b, w));
                        adj[b].push((a, w));
                    }
                }
            }
        }
        Self {
            poly: poly.clone(),
            delta,
            nodes,
            cells,
            origin: min,
            frame_angle: psi_sd,
            adj,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Grid nodes that `p` sees directly, searching outward ring by ring.
    fn links(&self, p: Point) -> Vec<(usize, f64)> {
        let f = Frame {
            psi_sd: self.frame_angle,
        }
        .to_frame(p);
        let ci = ((f.x - self.origin.x) / self.delta).round() as i64;
        let cj = ((f.y - self.origin.y) / self.delta).round() as i64;
        for reach in [2i64, 4, 8] {
            let mut out = Vec::new();
            for i in ci - reach..=ci + reach {
                for j in cj - reach..=cj + reach {
                    if let Some(&n) = self.cells.get(&(i, j)) {
                        if segment_inside_polygon(p, self.nodes[n], &self.poly) {
                            out.push((n, p.dist(self.nodes[n])));
                        }
                    }
                }
            }
            if !out.is_empty() {
                return out;
            }
        }
        Vec::new()
    }

    /// Shortest grid route from `from` to `to` with a euclidean heuristic,
    /// then shortcut by line of sight. Returns the corner points only.
    pub fn astar(&self, from: Point, to: Point) -> Option<Vec<Point>> {
        if segment_inside_polygon(from, to, &self.poly) {
            return Some(vec![from, to]);
        }
        let n = self.nodes.len();
        let (s, g) = (n, n + 1);
        let start_links = self.links(from);
        let goal_links: HashMap<usize, f64> = self.links(to).into_iter().collect();
        if start_links.is_empty() || goal_links.is_empty() {
            return None;
        }
        let pos = |k: usize| match k {
            k if k == s => from,
            k if k == g => to,
            k => self.nodes[k],
        };
        let mut dist = vec![f64::INFINITY; n + 2];
        let mut prev = vec![usize::MAX; n + 2];
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        heap.push(Open {
            f: from.dist(to),
            node: s,
        });
        while let Some(Open { node, .. }) = heap.pop() {
            if node == g {
                break;
            }
            let d = dist[node];
            let mut relax = |m: usize, w: f64, heap: &mut BinaryHeap<Open>| {
                if d + w < dist[m] {
                    dist[m] = d + w;
                    prev[m] = node;
                    heap.push(Open {
                        f: dist[m] + pos(m).dist(to),
                        node: m,
                    });
                }
            };
            if node == s {
                for &(m, w) in &start_links {
                    relax(m, w, &mut heap);
                }
                continue;
            }
            for &(m, w) in &self.adj[node] {
                relax(m, w, &mut heap);
            }
            if let Some(&w) = goal_links.get(&node) {
                relax(g, w, &mut heap);
            }
        }
        if !dist[g].is_finite() {
            return None;
        }
        let mut route = vec![g];
        while let Some(&k) = route.last() {
            if k == s {
                break;
            }
            route.push(prev[k]);
        }
        route.reverse();
        let pts: Vec<Point> = route.into_iter().map(pos).collect();
        Some(self.smooth(&pts))
    }

    fn smooth(&self, pts: &[Point]) -> Vec<Point> {
        let mut out = vec![pts[0]];
        let mut i = 0;
        while i + 1 < pts.len() {
            let mut j = pts.len() - 1;
            while j > i + 1 && !segment_inside_polygon(pts[i], pts[j], &self.poly) {
                j -= 1;
            }
            out.push(pts[j]);
            i = j;
        }
        out
    }

    /// Route from `pos` to the nearest of `targets`, as δ-spaced waypoints
    /// after `pos`, with the chosen target index.
    ///
    /// The euclidean-nearest target is taken directly when the straight
    /// segment stays inside; otherwise every target is searched and the
    /// shortest route wins. Ties go to the lowest index.
    pub fn route(
        &self,
        pos: Point,
        targets: &[Point],
    ) -> Result<(Vec<Point>, usize), CoverageError> {
        let nearest = (0..targets.len())
            .min_by(|&a, &b| {
                pos.dist(targets[a])
                    .total_cmp(&pos.dist(targets[b]))
                    .then(a.cmp(&b))
            })
            .ok_or(CoverageError::NoTargets)?;
        if segment_inside_polygon(pos, targets[nearest], &self.poly) {
            return Ok((gen_waypoints(pos, targets[nearest], self.delta), nearest));
        }
        let mut best: Option<(f64, usize, Vec<Point>)> = None;
        for (k, &t) in targets.iter().enumerate() {
            if best.as_ref().is_some_and(|b| pos.dist(t) >= b.0) {
                continue;
            }
            if let Some(corners) = self.astar(pos, t) {
                let len = path_length(corners[0], &corners[1..]);
                if best.as_ref().is_none_or(|b| len < b.0) {
                    best = Some((len, k, corners));
                }
            }
        }
        let (_, k, corners) = best.ok_or(CoverageError::Unreachable { x: pos.x, y: pos.y })?;
        let mut out = Vec::new();
        for w in corners.windows(2) {
            out.extend(gen_waypoints(w[0], w[1], self.delta));
        }
        Ok((out, k))
    }
}

/// One-shot transit: builds the grid and routes from `pos` to the nearest target.
pub fn plan_transit(
    pos: Point,
    targets: &[Point],
    poly: &Polygon,
    delta: f64,
) -> Result<(Vec<Point>, usize), CoverageError> {
    TransitPlanner::new(poly, delta, 0.0).route(pos, targets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_shape() -> Polygon {
        Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(100.0, 0.0),
            Point::new(100.0, 30.0),
            Point::new(30.0, 30.0),
            Point::new(30.0, 100.0),
            Point::new(0.0, 100.0),
        ])
        .unwrap()
    }

    #[test]
    fn waypoint_spacing() {
        let w = gen_waypoints(Point::new(0.0, 0.0), Point::new(25.0, 0.0), 10.0);
        assert_eq!(w.len(), 3);
        assert_eq!(*w.last().unwrap(), Point::new(25.0, 0.0));
        assert_eq!(
            gen_waypoints(Point::new(0.0, 0.0), Point::new(20.0, 0.0), 10.0).len(),
            2
        );
        assert!(gen_waypoints(Point::new(1.0, 1.0), Point::new(1.0, 1.0), 10.0).is_empty());
    }

    #[test]
    fn straight_when_visible() {
        let poly = l_shape();
        let (path, k) = plan_transit(
            Point::new(5.0, 5.0),
            &[Point::new(90.0, 20.0), Point::new(20.0, 90.0)],
            &poly,
            5.0,
        )
        .unwrap();
        assert_eq!(k, 0);
        let len = path_length(Point::new(5.0, 5.0), &path);
        assert!((len - Point::new(5.0, 5.0).dist(Point::new(90.0, 20.0))).abs() < 1e-9);
    }

    #[test]
    fn routes_around_corner() {
        let poly = l_shape();
        let (a, b) = (Point::new(90.0, 15.0), Point::new(15.0, 90.0));
        let (path, _) = plan_transit(a, &[b], &poly, 5.0).unwrap();
        let mut prev = a;
        for &p in &path {
            assert!(segment_inside_polygon(prev, p, &poly));
            assert!(prev.dist(p) <= 5.0 + 1e-9);
            prev = p;
        }
        // shortest route bends at the reflex corner (30, 30)
        let c = Point::new(30.0, 30.0);
        let opt = a.dist(c) + c.dist(b);
        let len = path_length(a, &path);
        assert!(len >= opt - 1e-9 && len <= 1.1 * opt, "{len} vs {opt}");
    }

    #[test]
    fn grid_nodes_inside() {
        let p = TransitPlanner::new(&l_shape(), 10.0, 0.0);
        assert_eq!(p.node_count(), 11 * 4 + 4 * 7);
    }
}
