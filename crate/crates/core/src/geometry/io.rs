use std::fmt::Write as _;
use std::path::Path;

use super::{GeometryError, Point, Polygon};

/// Parses the `x,y` per line polygon format. Lines starting with `#` and
/// blank lines are ignored.
pub fn parse_polygon(text: &str) -> Result<Polygon, GeometryError> {
    let mut pts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| GeometryError::Parse {
            line: i + 1,
            message,
        };
        let mut fields = line.split(',').map(str::trim);
        let (Some(xs), Some(ys), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(format!("expected `x,y`, got `{line}`")));
        };
        let x: f64 = xs
            .parse()
            .map_err(|e| parse_err(format!("bad x `{xs}`: {e}")))?;
        let y: f64 = ys
            .parse()
            .map_err(|e| parse_err(format!("bad y `{ys}`: {e}")))?;
        pts.push(Point::new(x, y));
    }
    Polygon::new(pts)
}

pub fn read_polygon_file(path: impl AsRef<Path>) -> Result<Polygon, GeometryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))?;
    parse_polygon(&text)
}

pub fn format_polygon(poly: &Polygon) -> String {
    let mut s = String::from("# x,y (m)\n");
    for v in poly.vertices() {
        let _ = writeln!(s, "{},{}", v.x, v.y);
    }
    s
}
