use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{MissionLog, Scenario};
use crate::contour::write_trace_csv;
use crate::coverage::{cells_geojson, line_geojson, plan_geojson, write_plan_csv};
use crate::geometry::format_polygon;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Started,
    Completed,
    Failed,
}

/// Run manifest, written before work starts and rewritten when it ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// SHA-256 of the canonical JSON of `scenario` (or of `args`).
    pub config_hash: String,
    #[serde(default)]
    pub overrides: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub args: Value,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub outputs: Vec<String>,
    #[serde(default)]
    pub summary: Value,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, config_hash: String) -> Self {
        Self {
            tool: "bathy".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config_hash,
            overrides: Vec::new(),
            scenario: None,
            args: Value::Null,
            status: RunStatus::Started,
            error: None,
            outputs: Vec::new(),
            summary: Value::Null,
        }
    }

    pub fn hash_json(v: &Value) -> String {
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("manifest.json"), text + "\n")
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

fn create(dir: &Path, name: &str, out: &mut Vec<String>) -> std::io::Result<BufWriter<File>> {
    out.push(name.to_string());
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn json(dir: &Path, name: &str, v: &Value, out: &mut Vec<String>) -> std::io::Result<()> {
    let mut w = create(dir, name, out)?;
    serde_json::to_writer(&mut w, v).map_err(std::io::Error::other)?;
    w.flush()
}

/// Writes every artifact the log holds into `dir`; returns the file names.
pub fn write_mission_log(dir: &Path, log: &MissionLog) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();

    let mut w = create(dir, "trace.csv", &mut out)?;
    writeln!(w, "t,x,y,psi,phase")?;
    for p in &log.poses {
        writeln!(w, "{},{},{},{},{}", p.t, p.x, p.y, p.psi, p.phase.as_str())?;
    }
    w.flush()?;

    let mut w = create(dir, "measurements.csv", &mut out)?;
    writeln!(w, "t,x,y,depth")?;
    for m in &log.measurements {
        writeln!(w, "{},{},{},{}", m.t, m.x, m.y, m.depth)?;
    }
    w.flush()?;

    let mut w = create(dir, "controller.csv", &mut out)?;
    write_trace_csv(&mut w, &log.ffcb)?;
    w.flush()?;

    let mut w = create(dir, "hypers.csv", &mut out)?;
    writeln!(w, "t_start,t_applied,n_points,sigma_f2,sigma_n2,length_scale,lml,iterations,evaluations,converged")?;
    for h in &log.hypers {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            h.t_start,
            h.t_applied,
            h.n_points,
            h.hypers.sigma_f2,
            h.hypers.sigma_n2,
            h.hypers.length_scale,
            h.lml,
            h.iterations,
            h.evaluations,
            h.converged
        )?;
    }
    w.flush()?;

    json(
        dir,
        "b_cont.geojson",
        &line_geojson(&log.b_cont, "b_cont"),
        &mut out,
    )?;
    if let Some(poly) = &log.traced_polygon {
        let mut w = create(dir, "traced_polygon.csv", &mut out)?;
        w.write_all(format_polygon(poly).as_bytes())?;
        w.flush()?;
    }
    if let Some(plan) = &log.plan {
        let mut w = create(dir, "plan.csv", &mut out)?;
        write_plan_csv(&mut w, plan)?;
        w.flush()?;
        json(dir, "cells.geojson", &cells_geojson(plan.cells()), &mut out)?;
        json(dir, "path.geojson", &plan_geojson(plan), &mut out)?;
    }
    Ok(out)
}
