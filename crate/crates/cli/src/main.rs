use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bathy_core::contour::ContourError;
use bathy_core::coverage::{
    cells_geojson, dmpp, plan_coverage, plan_geojson, write_plan_csv, CoverageError,
};
use bathy_core::geometry::{read_polygon_file, GeometryError, Point, Polygon};
use bathy_core::gp::{
    format_checkpoint, op_count, optimize_hypers, parse_samples, time_factorizations, GpError,
    GpModel, HyperBounds, HyperParams, OptimizerOptions,
};
use bathy_core::sim::{
    load_scenario, run_mission, write_mission_log, Manifest, ResolvedScenario, RunStatus, SimError,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "bathy",
    version,
    about = "Adaptive bathymetric survey simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a full mission from a scenario file or a run manifest.
    Run(RunArgs),
    /// Split a polygon into sweep-monotone cells.
    Partition(PartitionArgs),
    /// Plan a coverage path over a polygon.
    Plan(PlanArgs),
    /// Fit kernel hyper-parameters to depth samples.
    GpFit(GpFitArgs),
    /// Compare batch and sequential prediction cost.
    BenchOps(BenchArgs),
    /// Re-execute the invocation recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Clone, Debug, Default)]
struct OutArgs {
    /// Output directory; defaults to `<BATHY_OUT>/<command>-<hash>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Root for default output directories.
    #[arg(long, env = "BATHY_OUT", default_value = "bathy-out")]
    out_root: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct RunArgs {
    /// Scenario TOML, or a manifest.json from an earlier run.
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the scenario polygon with this file.
    #[arg(long)]
    polygon: Option<PathBuf>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "sweep-dir", allow_hyphen_values = true)]
    sweep_dir: Option<f64>,
    /// Scenario override `key=value`; bare keys address `[mission]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArgs,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct PartitionArgs {
    #[arg(long)]
    polygon: PathBuf,
    /// Track width (m).
    #[arg(long, default_value_t = 10.0)]
    delta: f64,
    /// Sweep direction (rad, counter-clockwise from east).
    #[arg(long = "sweep-dir", default_value_t = 0.0, allow_hyphen_values = true)]
    sweep_dir: f64,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArgs,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct PlanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    poly: PartitionArgs,
    /// Start position `x,y`; the first polygon vertex when absent.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    start: Option<[f64; 2]>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct GpFitArgs {
    /// CSV of samples with `x`, `y` and `depth` columns.
    #[arg(long)]
    data: PathBuf,
    /// Starting point `sigma_f2,sigma_n2,length_scale`.
    #[arg(long, value_parser = parse_hypers, default_value = "1,0.01,10")]
    init: [f64; 3],
    /// Regress about the sample mean instead of zero.
    #[arg(long)]
    center: bool,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArgs,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct BenchArgs {
    #[arg(long, default_value_t = 500)]
    n: u64,
    #[arg(long, default_value_t = 50)]
    m: u64,
    /// Timing repetitions; the fastest is kept.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    out: OutArgs,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    #[command(flatten)]
    out: OutArgs,
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    <[f64; 2]>::try_from(v).map_err(|_| "expected x,y".into())
}

fn parse_hypers(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|_| "expected sigma_f2,sigma_n2,length_scale".into())
}

/// Error with its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(m: impl ToString) -> Self {
        Self {
            code: 2,
            message: m.to_string(),
        }
    }
    fn geometry(m: impl ToString) -> Self {
        Self {
            code: 3,
            message: m.to_string(),
        }
    }
    fn numerical(m: impl ToString) -> Self {
        Self {
            code: 4,
            message: m.to_string(),
        }
    }
    fn abort(m: impl ToString) -> Self {
        Self {
            code: 5,
            message: m.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::config(e)
    }
}

impl From<GeometryError> for Failure {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::Io(_) => Failure::config(e),
            _ => Failure::geometry(e),
        }
    }
}

impl From<CoverageError> for Failure {
    fn from(e: CoverageError) -> Self {
        match e {
            CoverageError::Geometry(g) => g.into(),
            CoverageError::InvalidDelta(_) | CoverageError::SweepDirection(_) => Failure::config(e),
            _ => Failure::geometry(e),
        }
    }
}

impl From<GpError> for Failure {
    fn from(e: GpError) -> Self {
        match e {
            GpError::Checkpoint(_) | GpError::InvalidHypers(_) => Failure::config(e),
            _ => Failure::numerical(e),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) | SimError::Io(_) => Failure::config(e),
            SimError::Geometry(g) => g.into(),
            SimError::Coverage(c) => c.into(),
            SimError::Gp(g) => g.into(),
            SimError::Contour(ContourError::Geometry(g)) => g.into(),
            SimError::Numerical(_) | SimError::Contour(_) => Failure::numerical(e),
            SimError::OutOfField { .. } | SimError::Timeout(_) => Failure::abort(e),
        }
    }
}

type Outcome = Result<(Vec<String>, Value), Failure>;

/// Runs `work` inside `dir`, bracketing it with manifest writes.
fn with_manifest(
    dir: &Path,
    mut manifest: Manifest,
    work: impl FnOnce(&Path) -> Outcome,
) -> Result<(), Failure> {
    manifest.write(dir)?;
    let result = work(dir);
    match &result {
        Ok((outputs, summary)) => {
            manifest.status = RunStatus::Completed;
            manifest.outputs.clone_from(outputs);
            manifest.summary = summary.clone();
        }
        Err(f) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(f.message.clone());
        }
    }
    manifest.write(dir)?;
    result.map(|_| ())
}

fn out_dir(out: &OutArgs, command: &str, hash: &str) -> PathBuf {
    out.out
        .clone()
        .unwrap_or_else(|| out.out_root.join(format!("{command}-{}", &hash[..12])))
}

fn write_json(dir: &Path, name: &str, v: &Value, outputs: &mut Vec<String>) -> std::io::Result<()> {
    std::fs::write(
        dir.join(name),
        serde_json::to_string_pretty(v).map_err(std::io::Error::other)? + "\n",
    )?;
    outputs.push(name.into());
    Ok(())
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn sha256_file(p: &Path) -> Result<String, Failure> {
    let bytes = std::fs::read(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
    Ok(Manifest::hash_json(&json!(String::from_utf8_lossy(&bytes))))
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let mut overrides = Vec::new();
    if let Some(p) = &args.polygon {
        overrides.push(format!("polygon={}", absolute(p).display()));
    }
    if let Some(s) = args.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(d) = args.delta {
        overrides.push(format!("delta={d}"));
    }
    if let Some(d) = args.sweep_dir {
        overrides.push(format!("psi_sd={d}"));
    }
    overrides.extend(args.set.iter().cloned());
    // everything is validated before anything is written
    let sc: ResolvedScenario = load_scenario(&args.scenario, &overrides)?;
    let hash = sc.config_hash();
    let dir = out_dir(&args.out, "run", &hash);
    let mut manifest = Manifest::new("run", Some(sc.scenario.mission.seed), hash);
    manifest.overrides = overrides;
    manifest.scenario = Some(sc.scenario.clone());
    manifest.args = serde_json::to_value(args).map_err(Failure::config)?;

    with_manifest(&dir, manifest, |dir| {
        let t0 = Instant::now();
        let m = &sc.scenario.mission;
        let (log, err) = match run_mission(m, &sc.scenario.field, &sc.polygon) {
            Ok(log) => (log, None),
            Err(a) => (*a.log, Some(a.error)),
        };
        let wall = t0.elapsed().as_secs_f64();
        let outputs = write_mission_log(dir, &log)?;
        let summary = json!({
            "sim_time": log.sim_time(),
            "wall_time": wall,
            "init_end": log.init_end,
            "contour_end": log.contour_end,
            "coverage_end": log.coverage_end,
            "b_cont_points": log.b_cont.len(),
            "b_cont_closed": log.b_cont_closed(),
            "closure_gap": log.closure_gap,
            "traced_area": log.traced_polygon.as_ref().map(Polygon::area),
            "cells": log.plan.as_ref().map(|p| p.cells().len()),
            "path_length": log.plan.as_ref().map(|p| p.total_length),
            "measurements": log.measurements.len(),
            "refits": log.hypers.len(),
            "final_hypers": log.final_hypers,
            "uncertainty": log.uncertainty,
        });
        println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
        match err {
            None => Ok((outputs, summary)),
            Some(SimError::Config(e)) => Err(Failure::config(e)),
            Some(e) => Err(Failure::abort(format!(
                "mission aborted at t = {:.0} s: {e}",
                log.sim_time()
            ))),
        }
    })
}

fn load_polygon(args: &PartitionArgs) -> Result<(Polygon, String), Failure> {
    let hash = sha256_file(&args.polygon)?;
    Ok((read_polygon_file(&args.polygon)?, hash))
}

fn invocation_hash(args: &Value, input_hash: &str) -> String {
    Manifest::hash_json(&json!({ "args": args, "input": input_hash }))
}

fn cmd_partition(args: &PartitionArgs) -> Result<(), Failure> {
    let (poly, input) = load_polygon(args)?;
    let mut args = args.clone();
    args.polygon = absolute(&args.polygon);
    let value = serde_json::to_value(&args).map_err(Failure::config)?;
    let hash = invocation_hash(&value, &input);
    let dir = out_dir(&args.out, "partition", &hash);
    let mut manifest = Manifest::new("partition", None, hash);
    manifest.args = value;
    with_manifest(&dir, manifest, |dir| {
        let part = dmpp(&poly, args.delta, args.sweep_dir)?;
        let mut outputs = Vec::new();
        write_json(
            dir,
            "cells.geojson",
            &cells_geojson(&part.cells),
            &mut outputs,
        )?;
        let summary = json!({
            "cells": part.cells.len(),
            "tracks": part.cells.iter().map(|c| c.tracks.len()).sum::<usize>(),
            "input_sha256": input,
        });
        println!("{} cells", part.cells.len());
        Ok((outputs, summary))
    })
}

fn cmd_plan(args: &PlanArgs) -> Result<(), Failure> {
    let (poly, input) = load_polygon(&args.poly)?;
    let mut args = args.clone();
    args.poly.polygon = absolute(&args.poly.polygon);
    let value = serde_json::to_value(&args).map_err(Failure::config)?;
    let hash = invocation_hash(&value, &input);
    let dir = out_dir(&args.poly.out, "plan", &hash);
    let mut manifest = Manifest::new("plan", None, hash);
    manifest.args = value;
    let start = args.start.map_or(poly.vertex(0), |[x, y]| Point::new(x, y));
    with_manifest(&dir, manifest, |dir| {
        let plan = plan_coverage(&poly, start, args.poly.delta, args.poly.sweep_dir)?;
        let mut outputs = vec!["plan.csv".to_string()];
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("plan.csv"))?);
        write_plan_csv(&mut w, &plan)?;
        drop(w);
        write_json(
            dir,
            "cells.geojson",
            &cells_geojson(plan.cells()),
            &mut outputs,
        )?;
        write_json(dir, "path.geojson", &plan_geojson(&plan), &mut outputs)?;
        let summary = json!({
            "cells": plan.cells().len(),
            "waypoints": plan.waypoints.len(),
            "total_length": plan.total_length,
            "transit_length": plan.transit_length,
            "input_sha256": input,
        });
        println!(
            "{} cells, {} waypoints, path {:.1} m ({:.1} m transit)",
            plan.cells().len(),
            plan.waypoints.len(),
            plan.total_length,
            plan.transit_length
        );
        Ok((outputs, summary))
    })
}

fn cmd_gp_fit(args: &GpFitArgs) -> Result<(), Failure> {
    let input = sha256_file(&args.data)?;
    let text = std::fs::read_to_string(&args.data)?;
    let (xs, ys) = parse_samples(&text)?;
    let [a, b, c] = args.init;
    let initial = HyperParams::new(a, b, c)?;
    let mut args = args.clone();
    args.data = absolute(&args.data);
    let value = serde_json::to_value(&args).map_err(Failure::config)?;
    let hash = invocation_hash(&value, &input);
    let dir = out_dir(&args.out, "gp-fit", &hash);
    let mut manifest = Manifest::new("gp-fit", None, hash);
    manifest.args = value;
    with_manifest(&dir, manifest, |dir| {
        let mut model = if args.center {
            GpModel::new_centered(initial)?
        } else {
            GpModel::new(initial)?
        };
        model.append(&xs, &ys)?;
        let fit = optimize_hypers(
            &model,
            initial,
            &HyperBounds::default(),
            &OptimizerOptions::default(),
        )?;
        let model = model.with_hypers(fit.hypers)?;
        std::fs::write(dir.join("checkpoint.csv"), format_checkpoint(&model))?;
        let h = fit.hypers;
        let summary = json!({
            "n": xs.len(),
            "sigma_f": h.sigma_f2.sqrt(),
            "sigma_n": h.sigma_n2.sqrt(),
            "length_scale": h.length_scale,
            "fit": fit,
            "input_sha256": input,
        });
        println!(
            "n={} sigma_f={:.4} sigma_n={:.4} l={:.4} lml={:.4} converged={}",
            xs.len(),
            h.sigma_f2.sqrt(),
            h.sigma_n2.sqrt(),
            h.length_scale,
            fit.lml,
            fit.converged
        );
        Ok((vec!["checkpoint.csv".into()], summary))
    })
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    if args.n < 1 || args.m < 1 {
        return Err(Failure::config("n and m must be at least 1"));
    }
    let value = serde_json::to_value(args).map_err(Failure::config)?;
    let hash = Manifest::hash_json(&value);
    let dir = out_dir(&args.out, "bench-ops", &hash);
    let mut manifest = Manifest::new("bench-ops", Some(args.seed), hash);
    manifest.args = value;
    with_manifest(&dir, manifest, |_| {
        let c = op_count(args.n, args.m);
        println!(
            "model ratio (n={}, m={}): {:.1}x",
            args.n,
            args.m,
            c.ratio()
        );
        let t = time_factorizations(args.n as usize, args.m as usize, args.reps, args.seed)?;
        println!("{:<12}{:>16}{:>14}", "", "model ops", "wall (ms)");
        println!(
            "{:<12}{:>16}{:>14.3}",
            "batch",
            c.batch,
            t.batch.as_secs_f64() * 1e3
        );
        println!(
            "{:<12}{:>16}{:>14.3}",
            "sequential",
            c.sequential,
            t.sequential.as_secs_f64() * 1e3
        );
        println!("measured ratio: {:.1}x", t.ratio());
        let summary = json!({
            "model_ratio": c.ratio(),
            "batch_ops": c.batch.to_string(),
            "sequential_ops": c.sequential.to_string(),
            "batch_seconds": t.batch.as_secs_f64(),
            "sequential_seconds": t.sequential.as_secs_f64(),
            "measured_ratio": t.ratio(),
        });
        Ok((Vec::new(), summary))
    })
}

fn cmd_replay(args: &ReplayArgs) -> Result<(), Failure> {
    let m = Manifest::read(&args.manifest)
        .map_err(|e| Failure::config(format!("{}: {e}", args.manifest.display())))?;
    let bad = |e: serde_json::Error| Failure::config(format!("manifest args: {e}"));
    let a = m.args;
    let out = args.out.clone();
    match m.command.as_str() {
        "run" => {
            // the manifest carries the fully resolved scenario
            let r = RunArgs {
                scenario: absolute(&args.manifest),
                seed: None,
                polygon: None,
                delta: None,
                sweep_dir: None,
                set: Vec::new(),
                out,
            };
            cmd_run(&r)
        }
        "partition" => cmd_partition(&PartitionArgs {
            out,
            ..serde_json::from_value(a).map_err(bad)?
        }),
        "plan" => {
            let mut p: PlanArgs = serde_json::from_value(a).map_err(bad)?;
            p.poly.out = out;
            cmd_plan(&p)
        }
        "gp-fit" => cmd_gp_fit(&GpFitArgs {
            out,
            ..serde_json::from_value(a).map_err(bad)?
        }),
        "bench-ops" => cmd_bench(&BenchArgs {
            out,
            ..serde_json::from_value(a).map_err(bad)?
        }),
        other => Err(Failure::config(format!(
            "unknown command `{other}` in manifest"
        ))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Plan(a) => cmd_plan(a),
        Command::GpFit(a) => cmd_gp_fit(a),
        Command::BenchOps(a) => cmd_bench(a),
        Command::Replay(a) => cmd_replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
