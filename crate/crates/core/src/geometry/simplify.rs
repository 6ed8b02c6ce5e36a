use super::{point_segment_distance, Point};

fn douglas_peucker(pts: &[Point], tol: f64, keep: &mut [bool]) {
    if pts.len() < 3 {
        return;
    }
    let (a, b) = (pts[0], pts[pts.len() - 1]);
    let (idx, dmax) = pts[1..pts.len() - 1]
        .iter()
        .enumerate()
        .map(|(i, &p)| (i + 1, point_segment_distance(p, a, b)))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if dmax > tol {
        keep[idx] = true;
        douglas_peucker(&pts[..=idx], tol, &mut keep[..=idx]);
        douglas_peucker(&pts[idx..], tol, &mut keep[idx..]);
    }
}

/// Douglas-Peucker simplification of a closed ring.
///
/// The ring is split at its first point and the point farthest from it;
/// both chains are simplified independently. Input must not repeat the
/// first point at the end.
pub fn simplify_closed(ring: &[Point], tol: f64) -> Vec<Point> {
    let n = ring.len();
    if n <= 3 {
        return ring.to_vec();
    }
    let far = (1..n)
        .max_by(|&i, &j| ring[0].dist2(ring[i]).total_cmp(&ring[0].dist2(ring[j])))
        .unwrap();
    let mut closed: Vec<Point> = ring.to_vec();
    closed.push(ring[0]);
    let mut keep = vec![false; n + 1];
    keep[0] = true;
    keep[far] = true;
    keep[n] = true;
    douglas_peucker(&closed[..=far], tol, &mut keep[..=far]);
    douglas_peucker(&closed[far..], tol, &mut keep[far..]);
    closed
        .into_iter()
        .zip(keep)
        .take(n)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}
