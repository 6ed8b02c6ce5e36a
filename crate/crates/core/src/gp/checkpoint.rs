//! Model checkpoints: one header line of hyper-parameters followed by
//! `x,y,depth` rows.
//!
//! ```text
//! # sigma_f2=4,sigma_n2=0.01,length_scale=10
//! x,y,depth
//! 0.5,1.25,3.2
//! ```
//!
//! Floats are written in shortest round-trip form, so reloading gives the
//! exact inputs of the original fit.

use std::fmt::Write as _;
use std::path::Path;

use super::{GpError, GpModel, HyperParams};
use crate::geometry::Point;

pub fn format_checkpoint(model: &GpModel) -> String {
    let h = model.hypers();
    let mut s = format!(
        "# sigma_f2={},sigma_n2={},length_scale={}\nx,y,depth\n",
        h.sigma_f2, h.sigma_n2, h.length_scale
    );
    for (p, y) in model.train_x().iter().zip(model.train_y()) {
        let _ = writeln!(s, "{},{},{}", p.x, p.y, y);
    }
    s
}

/// Parses a checkpoint into hyper-parameters and training rows.
pub fn parse_checkpoint(text: &str) -> Result<(HyperParams, Vec<Point>, Vec<f64>), GpError> {
    let err = |m: String| GpError::Checkpoint(m);
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| err("empty file".into()))?;
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| err("missing hyper-parameter header".into()))?;
    let mut vals = [None; 3];
    for kv in body.split(',') {
        let (k, v) = kv
            .trim()
            .split_once('=')
            .ok_or_else(|| err(format!("bad header field `{kv}`")))?;
        let v: f64 = v.trim().parse().map_err(|e| err(format!("{k}: {e}")))?;
        let slot = match k.trim() {
            "sigma_f2" => 0,
            "sigma_n2" => 1,
            "length_scale" => 2,
            other => return Err(err(format!("unknown header key `{other}`"))),
        };
        vals[slot] = Some(v);
    }
    let [Some(sf2), Some(sn2), Some(l)] = vals else {
        return Err(err(
            "header must set sigma_f2, sigma_n2 and length_scale".into()
        ));
    };
    let hypers = HyperParams::new(sf2, sn2, l)?;
    let (xs, ys) = parse_rows(lines, 2)?;
    Ok((hypers, xs, ys))
}

/// Reads `x,y,depth` rows, skipping comments and an optional column header.
pub(crate) fn parse_rows<'a>(
    lines: impl Iterator<Item = &'a str>,
    first_line: usize,
) -> Result<(Vec<Point>, Vec<f64>), GpError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, raw) in lines.enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("x,") {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| GpError::Checkpoint(format!("line {}: {e}", i + first_line)))
        };
        if f.len() != 3 {
            return Err(GpError::Checkpoint(format!(
                "line {}: expected 3 columns, got {}",
                i + first_line,
                f.len()
            )));
        }
        xs.push(Point::new(parse(f[0])?, parse(f[1])?));
        ys.push(parse(f[2])?);
    }
    Ok((xs, ys))
}

/// Reads depth samples from CSV. A header row, if present, locates the `x`,
/// `y` and `depth` columns by name; without one the file must have exactly
/// those three columns in order. Lines starting with `#` are skipped.
pub fn parse_samples(text: &str) -> Result<(Vec<Point>, Vec<f64>), GpError> {
    let err = |m: String| GpError::Checkpoint(m);
    let mut rows = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let mut cols = [0, 1, 2];
    let mut width = 3;
    if let Some((_, first)) = rows.peek() {
        let names: Vec<&str> = first.split(',').map(str::trim).collect();
        if names.iter().any(|s| s.parse::<f64>().is_err()) {
            for (slot, want) in ["x", "y", "depth"].iter().enumerate() {
                cols[slot] = names
                    .iter()
                    .position(|n| n == want)
                    .ok_or_else(|| err(format!("header has no `{want}` column")))?;
            }
            width = names.len();
            rows.next();
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (line, text) in rows {
        let f: Vec<&str> = text.split(',').map(str::trim).collect();
        if f.len() != width {
            return Err(err(format!(
                "line {line}: expected {width} columns, got {}",
                f.len()
            )));
        }
        let v = |c: usize| {
            f[c].parse::<f64>()
                .map_err(|e| err(format!("line {line}: {e}")))
        };
        xs.push(Point::new(v(cols[0])?, v(cols[1])?));
        ys.push(v(cols[2])?);
    }
    Ok((xs, ys))
}

pub fn write_checkpoint(model: &GpModel, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, format_checkpoint(model))
}

/// Loads a checkpoint and refits it in a single block.
pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<GpModel, GpError> {
    let text =
        std::fs::read_to_string(path.as_ref()).map_err(|e| GpError::Checkpoint(e.to_string()))?;
    let (h, xs, ys) = parse_checkpoint(&text)?;
    GpModel::fit(h, &xs, &ys)
}
