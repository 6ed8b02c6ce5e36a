use std::io::Write;

use serde_json::{json, Value};

use super::{Cell, PathPlan};
use crate::geometry::Point;

fn coords(pts: &[Point]) -> Vec<[f64; 2]> {
    pts.iter().map(|p| [p.x, p.y]).collect()
}

/// Rows `index,x,y,label`.
pub fn write_plan_csv<W: Write>(mut w: W, plan: &PathPlan) -> std::io::Result<()> {
    writeln!(w, "index,x,y,label")?;
    for (i, wp) in plan.waypoints.iter().enumerate() {
        writeln!(w, "{i},{},{},{}", wp.p.x, wp.p.y, wp.label.as_str())?;
    }
    Ok(())
}

/// A single LineString feature.
pub fn line_geojson(pts: &[Point], name: &str) -> Value {
    json!({
        "type": "FeatureCollection",
        "features": [{
            "type": "Feature",
            "properties": { "name": name },
            "geometry": { "type": "LineString", "coordinates": coords(pts) }
        }]
    })
}

pub fn plan_geojson(plan: &PathPlan) -> Value {
    let mut v = line_geojson(&plan.points(), "path");
    v["features"][0]["properties"]["total_length"] = json!(plan.total_length);
    v["features"][0]["properties"]["transit_length"] = json!(plan.transit_length);
    v
}

/// Cell outlines as closed Polygon features.
pub fn cells_geojson(cells: &[Cell]) -> Value {
    let features: Vec<Value> = cells
        .iter()
        .map(|c| {
            let mut ring = coords(&c.boundary);
            if let Some(&first) = ring.first() {
                ring.push(first);
            }
            json!({
                "type": "Feature",
                "properties": {
                    "cell": c.index,
                    "open_line": c.open_line,
                    "close_line": c.close_line,
                    "tracks": c.tracks.len()
                },
                "geometry": { "type": "Polygon", "coordinates": [ring] }
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}
