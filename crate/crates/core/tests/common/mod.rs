#![allow(dead_code)]

use bathy_core::geometry::{Point, Polygon};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random star-shaped polygon about the origin (always simple).
pub fn star_polygon(rng: &mut ChaCha8Rng, r_min: f64, r_max: f64) -> Polygon {
    let n = rng.random_range(5..14);
    // jittered even angles keep every gap below pi
    let step = std::f64::consts::TAU / n as f64;
    let angles: Vec<f64> = (0..n)
        .map(|k| (k as f64 + rng.random_range(0.1..0.9)) * step)
        .collect();
    let pts = angles
        .iter()
        .map(|&a| {
            let r = rng.random_range(r_min..r_max);
            Point::new(r * a.cos(), r * a.sin())
        })
        .collect();
    Polygon::new(pts).expect("star polygons are simple")
}

pub fn u_polygon() -> Polygon {
    Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(100.0, 0.0),
        Point::new(100.0, 30.0),
        Point::new(34.0, 30.0),
        Point::new(34.0, 70.0),
        Point::new(100.0, 70.0),
        Point::new(100.0, 100.0),
        Point::new(0.0, 100.0),
    ])
    .unwrap()
}

/// Crossings of the line `{p : p·n = s}` with a closed ring, counting an
/// edge when exactly one endpoint lies strictly above the line.
pub fn ring_crossings(ring: &[Point], normal: Point, s: f64) -> usize {
    let n = ring.len();
    (0..n)
        .filter(|&i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            (a.dot(normal) > s) != (b.dot(normal) > s)
        })
        .count()
}

/// Shortest path between two points inside a simple polygon, by Dijkstra
/// over the visibility graph of the endpoints and polygon vertices.
pub fn visibility_shortest(poly: &Polygon, a: Point, b: Point) -> f64 {
    use bathy_core::geometry::segment_inside_polygon;
    let mut nodes = vec![a, b];
    nodes.extend_from_slice(poly.vertices());
    let n = nodes.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[0] = 0.0;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&i| !done[i])
            .min_by(|&i, &j| dist[i].total_cmp(&dist[j]))
            .unwrap();
        done[u] = true;
        for v in 0..n {
            if !done[v] && segment_inside_polygon(nodes[u], nodes[v], poly) {
                dist[v] = dist[v].min(dist[u] + nodes[u].dist(nodes[v]));
            }
        }
    }
    dist[1]
}
