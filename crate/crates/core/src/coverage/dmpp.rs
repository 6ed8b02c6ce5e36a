use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::CoverageError;
use crate::geometry::{line_crossings, trace_boundary, Point, Polygon};

/// Crossings of every sweep line with the polygon, in the sweep frame.
///
/// In the sweep frame the sweep advances along +x and sweep lines are
/// vertical; `sweep_crossings[i]` holds the sorted y positions on line `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    /// Nominal x of each line; all but possibly the last lie on the δ grid.
    pub xs: Vec<f64>,
    pub sweep_crossings: Vec<Vec<f64>>,
    pub sweep_count: Vec<usize>,
}

/// A straight trackline in world coordinates, from its low end to its high
/// end (sweep-frame y). Both ends coincide for a collapsed track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub line: usize,
    pub lo: Point,
    pub hi: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub index: usize,
    /// Bottom-left, top-left, top-right, bottom-right (clockwise).
    pub corners: [Point; 4],
    /// Closed counter-clockwise outline (first point not repeated).
    pub boundary: Vec<Point>,
    pub open_line: usize,
    pub close_line: usize,
    /// Which crossing pair of its lines the cell occupies, counted from the bottom.
    pub pair: usize,
    /// Tracklines in sweep order; empty when the cell is too thin to hold one.
    pub tracks: Vec<Track>,
}

impl Cell {
    /// First and last tracklines' endpoints, ordered like `corners`.
    pub fn shrunk_corners(&self) -> Option<[Point; 4]> {
        let (f, l) = (self.tracks.first()?, self.tracks.last()?);
        Some([f.lo, f.hi, l.hi, l.lo])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub cells: Vec<Cell>,
    pub sweep: SweepRecord,
    pub delta: f64,
    pub psi_sd: f64,
}

/// Rotation taking world coordinates into the sweep frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Frame {
    pub psi_sd: f64,
}

impl Frame {
    pub fn to_frame(self, p: Point) -> Point {
        p.rotate(-self.psi_sd)
    }

    pub fn to_world(self, p: Point) -> Point {
        p.rotate(self.psi_sd)
    }
}

pub(crate) fn check_inputs(
    poly: &Polygon,
    delta: f64,
    psi_sd: f64,
) -> Result<Frame, CoverageError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(CoverageError::InvalidDelta(delta));
    }
    if !(-FRAC_PI_2..FRAC_PI_2).contains(&psi_sd) {
        return Err(CoverageError::SweepDirection(psi_sd));
    }
    let frame = Frame { psi_sd };
    let (min, max) = poly.rotated(-psi_sd).bounds();
    if delta >= max.x - min.x {
        return Err(CoverageError::InvalidDelta(delta));
    }
    Ok(frame)
}

fn sweep(fp: &Polygon, delta: f64) -> (SweepRecord, Vec<f64>) {
    let (min, max) = fp.bounds();
    let mut xs = Vec::new();
    let mut k = 0usize;
    loop {
        let x = min.x + delta * k as f64;
        if x >= max.x {
            break;
        }
        xs.push(x);
        k += 1;
    }
    xs.push(max.x);
    let last = xs.len() - 1;
    // the extreme lines only graze the polygon; probe just inside them
    let query: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| match i {
            0 => x + 1e-9 * delta,
            i if i == last => x - 1e-9 * delta,
            _ => x,
        })
        .collect();
    let sweep_crossings: Vec<Vec<f64>> = query
        .iter()
        .map(|&x| line_crossings(Point::new(x, 0.0), 0.0, fp))
        .collect();
    let sweep_count = sweep_crossings.iter().map(Vec::len).collect();
    (
        SweepRecord {
            xs,
            sweep_crossings,
            sweep_count,
        },
        query,
    )
}

struct RawCell {
    open: usize,
    close: usize,
    pair: usize,
}

/// Opens and closes cells at changes in the crossing count. Open cells are
/// closed bottom to top against the previous line, then new cells open
/// bottom to top on the current one.
fn events(rec: &SweepRecord) -> Vec<RawCell> {
    let mut cells: Vec<RawCell> = Vec::new();
    let mut open: Vec<usize> = Vec::new();
    let mut prev = 0;
    for (i, &count) in rec.sweep_count.iter().enumerate() {
        if count != prev {
            for &c in &open {
                cells[c].close = i - 1;
            }
            open.clear();
            for j in 0..count / 2 {
                open.push(cells.len());
                cells.push(RawCell {
                    open: i,
                    close: usize::MAX,
                    pair: j,
                });
            }
        }
        prev = count;
    }
    let last = rec.sweep_count.len() - 1;
    for &c in &open {
        cells[c].close = last;
    }
    cells
}

fn chain_is_monotone(chain: &[Point], from_x: f64, to_x: f64) -> bool {
    let tol = 1e-9 * (1.0 + from_x.abs().max(to_x.abs()));
    let (lo, hi) = (from_x.min(to_x), from_x.max(to_x));
    let increasing = to_x >= from_x;
    let mut x = from_x;
    for p in chain {
        if p.x < lo - tol || p.x > hi + tol {
            return false;
        }
        if (increasing && p.x < x - tol) || (!increasing && p.x > x + tol) {
            return false;
        }
        x = p.x;
    }
    true
}

/// Counter-clockwise outline: bottom boundary left to right, then top
/// boundary right to left. Traced boundary pieces that are not monotone
/// along the sweep (a feature narrower than δ slipped between two lines)
/// are replaced by the chain of sweep-line crossings.
fn outline(
    raw: &RawCell,
    rec: &SweepRecord,
    query: &[f64],
    fp: &Polygon,
) -> Result<Vec<Point>, CoverageError> {
    let (o, c, j) = (raw.open, raw.close, raw.pair);
    let at = |i: usize, k: usize| Point::new(query[i], rec.sweep_crossings[i][2 * j + k]);
    let (bl, tl, tr, br) = (at(o, 0), at(o, 1), at(c, 1), at(c, 0));
    if o == c {
        return Ok(vec![bl, tl]);
    }
    let mut bottom = trace_boundary(bl, br, fp)?;
    if !chain_is_monotone(&bottom, bl.x, br.x) {
        bottom = (o + 1..c).map(|i| at(i, 0)).collect();
    }
    let mut top = trace_boundary(tr, tl, fp)?;
    if !chain_is_monotone(&top, tr.x, tl.x) {
        top = (o + 1..c).rev().map(|i| at(i, 1)).collect();
    }
    let mut out = vec![bl];
    out.extend(bottom);
    out.push(br);
    out.push(tr);
    out.extend(top);
    out.push(tl);
    out.dedup_by(|a, b| a.dist(*b) <= 1e-12);
    Ok(out)
}

/// Tracklines of one cell in the sweep frame as `(line, x, lo, hi)`.
///
/// Each line's interval is pulled in by δ at both ends (collapsing to its
/// midpoint when shorter than 2δ). An end line that faces the traced
/// boundary is dropped so tracks keep off it; an end line facing another
/// cell (its interval overlaps one on the neighbouring line) is kept so
/// spacing across the interface stays δ.
fn cell_tracks(raw: &RawCell, rec: &SweepRecord, delta: f64) -> Vec<(usize, f64, f64, f64)> {
    let (o, c, j) = (raw.open, raw.close, raw.pair);
    let last = rec.xs.len() - 1;
    let interval = |i: usize| {
        (
            rec.sweep_crossings[i][2 * j],
            rec.sweep_crossings[i][2 * j + 1],
        )
    };
    let faces_boundary = |i: usize, neighbour: usize| {
        let (lo, hi) = interval(i);
        !rec.sweep_crossings[neighbour]
            .chunks_exact(2)
            .any(|w| w[0] <= hi && lo <= w[1])
    };
    let usable = |i: usize| i != 0 && i != last;

    let start = if o == 0 || faces_boundary(o, o - 1) {
        o + 1
    } else {
        o
    };
    let end = if c == last || faces_boundary(c, c + 1) {
        c.saturating_sub(1)
    } else {
        c
    };
    let lines: Vec<usize> = if start <= end && c > 0 {
        (start..=end).filter(|&i| usable(i)).collect()
    } else {
        (o..=c).find(|&i| usable(i)).into_iter().collect()
    };
    if lines.is_empty() {
        log::warn!("cell on lines {o}..={c} is narrower than one track; skipped");
    }
    lines
        .into_iter()
        .map(|i| {
            let (lo, hi) = interval(i);
            if hi - lo < 2.0 * delta {
                let m = 0.5 * (lo + hi);
                (i, rec.xs[i], m, m)
            } else {
                (i, rec.xs[i], lo + delta, hi - delta)
            }
        })
        .collect()
}

/// Sweep-line partition of `poly` into cells monotone to `psi_sd` whose
/// tracklines sit on a common δ grid.
///
/// `psi_sd` is measured counter-clockwise from east and must lie in
/// `[-pi/2, pi/2)`; sweep lines are orthogonal to it.
pub fn dmpp(poly: &Polygon, delta: f64, psi_sd: f64) -> Result<Partition, CoverageError> {
    let frame = check_inputs(poly, delta, psi_sd)?;
    let fp = poly.rotated(-psi_sd);
    let (sweep, query) = sweep(&fp, delta);
    let raw = events(&sweep);
    let mut cells = Vec::with_capacity(raw.len());
    for (index, r) in raw.iter().enumerate() {
        let at = |i: usize, k: usize| {
            frame.to_world(Point::new(
                query[i],
                sweep.sweep_crossings[i][2 * r.pair + k],
            ))
        };
        let corners = [at(r.open, 0), at(r.open, 1), at(r.close, 1), at(r.close, 0)];
        let boundary = outline(r, &sweep, &query, &fp)?
            .into_iter()
            .map(|p| frame.to_world(p))
            .collect();
        let tracks = cell_tracks(r, &sweep, delta)
            .into_iter()
            .map(|(line, x, lo, hi)| Track {
                line,
                lo: frame.to_world(Point::new(x, lo)),
                hi: frame.to_world(Point::new(x, hi)),
            })
            .collect();
        cells.push(Cell {
            index,
            corners,
            boundary,
            open_line: r.open,
            close_line: r.close,
            pair: r.pair,
            tracks,
        });
    }
    Ok(Partition {
        cells,
        sweep,
        delta,
        psi_sd,
    })
}

/// Moves each cell's corners onto its first and last tracklines: δ inward
/// across the sweep, and one line inward along it at open boundary ends.
/// Cells too thin to hold a track yield `None`.
pub fn shrink_corners(partition: &Partition) -> Vec<Option<[Point; 4]>> {
    partition.cells.iter().map(Cell::shrunk_corners).collect()
}
