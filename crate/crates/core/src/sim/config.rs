use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BathymetryField, SimError};
use crate::contour::FfcbConfig;
use crate::geometry::{parse_polygon, Point, Polygon};
use crate::gp::HyperParams;

macro_rules! default_fn {
    ($($name:ident: $t:ty = $v:expr;)*) => {
        $(fn $name() -> $t { $v })*
    };
}

default_fn! {
    z_t: f64 = 4.5;
    r: f64 = 5.0;
    delta: f64 = 10.0;
    start: [f64; 2] = [250.0, 350.0];
    speed: f64 = 1.0;
    refit_period: f64 = 30.0;
    init_duration: f64 = 50.0;
    init_radius: f64 = 5.0;
    rate: f64 = 1.0;
    ema_half_life: f64 = 5.0;
    loop_buffer: usize = 50;
    psi_adj: f64 = FRAC_PI_2;
    epsilon_depth: f64 = 0.25;
    initial_hypers: [f64; 3] = [1.0, 0.01, 10.0];
    sigma_n2_floor: f64 = 1e-4;
    refit_max_points: usize = 300;
    max_time: f64 = 10_000.0;
}

/// Every mission parameter. Defaults reproduce the simulation column of the
/// parameter table plus simulator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    /// Target depth (m).
    #[serde(default = "z_t")]
    pub z_t: f64,
    /// Contour search radius (m).
    #[serde(default = "r")]
    pub r: f64,
    /// Track width (m).
    #[serde(default = "delta")]
    pub delta: f64,
    /// Sweep direction (rad, counter-clockwise from east).
    #[serde(default)]
    pub psi_sd: f64,
    #[serde(default = "start")]
    pub start: [f64; 2],
    /// Initial compass heading (rad).
    #[serde(default)]
    pub start_heading: f64,
    #[serde(default = "speed")]
    pub speed: f64,
    /// Hyper-parameter re-estimation period (s).
    #[serde(default = "refit_period")]
    pub refit_period: f64,
    #[serde(default = "init_duration")]
    pub init_duration: f64,
    #[serde(default = "init_radius")]
    pub init_radius: f64,
    /// Hz; must be a whole multiple of the control rate.
    #[serde(default = "rate")]
    pub sonar_rate: f64,
    #[serde(default = "rate")]
    pub control_rate: f64,
    #[serde(default = "ema_half_life")]
    pub ema_half_life: f64,
    #[serde(default = "loop_buffer")]
    pub loop_buffer: usize,
    #[serde(default = "psi_adj")]
    pub psi_adj: f64,
    #[serde(default = "epsilon_depth")]
    pub epsilon_depth: f64,
    /// Loop-closure distance (m); `1.5·r` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure_radius: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Sonar noise standard deviation (m).
    #[serde(default)]
    pub sonar_noise: f64,
    /// rad/s; absent means the commanded heading is attained every tick.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_turn_rate: Option<f64>,
    /// Coverage waypoint acceptance radius (m); `speed / control_rate` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waypoint_tolerance: Option<f64>,
    /// First-fit starting point `(σ_f², σ_n², l)`.
    #[serde(default = "initial_hypers")]
    pub initial_hypers: [f64; 3],
    /// Lower bound on the fitted noise variance (m²).
    #[serde(default = "sigma_n2_floor")]
    pub sigma_n2_floor: f64,
    /// Data handed to each refit is thinned to at most this many points.
    #[serde(default = "refit_max_points")]
    pub refit_max_points: usize,
    /// Regress about the running depth mean instead of zero.
    #[serde(default)]
    pub center_mean: bool,
    /// Spacing of the grid on which final uncertainty is summarized (m);
    /// `delta` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_probe_spacing: Option<f64>,
    /// Simulated-time limit (s) after which the mission aborts.
    #[serde(default = "max_time")]
    pub max_time: f64,
}

impl Default for MissionConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("r", self.r),
            ("delta", self.delta),
            ("speed", self.speed),
            ("refit_period", self.refit_period),
            ("init_radius", self.init_radius),
            ("sonar_rate", self.sonar_rate),
            ("control_rate", self.control_rate),
            ("ema_half_life", self.ema_half_life),
            ("max_turn_rate", self.max_turn_rate.unwrap_or(1.0)),
            ("sigma_n2_floor", self.sigma_n2_floor),
            ("max_time", self.max_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(SimError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let finite = [
            ("z_t", self.z_t),
            ("psi_sd", self.psi_sd),
            ("start_heading", self.start_heading),
            ("start.x", self.start[0]),
            ("start.y", self.start[1]),
            ("init_duration", self.init_duration),
            ("sonar_noise", self.sonar_noise),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(SimError::Config(format!("{name} must be finite, got {v}")));
            }
        }
        if self.init_duration < 0.0 || self.sonar_noise < 0.0 {
            return Err(SimError::Config(
                "init_duration and sonar_noise must be non-negative".into(),
            ));
        }
        self.sonar_substeps()?;
        if self.refit_max_points < 10 {
            return Err(SimError::Config(
                "refit_max_points must be at least 10".into(),
            ));
        }
        for (name, v) in [
            ("waypoint_tolerance", self.waypoint_tolerance),
            ("std_probe_spacing", self.std_probe_spacing),
        ] {
            if matches!(v, Some(x) if !(x > 0.0)) {
                return Err(SimError::Config(format!("{name} must be positive")));
            }
        }
        self.initial()?;
        self.ffcb()
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        Ok(())
    }

    /// Sonar pings per control tick.
    pub fn sonar_substeps(&self) -> Result<usize, SimError> {
        let k = self.sonar_rate / self.control_rate;
        let kr = k.round();
        if kr < 1.0 || (k - kr).abs() > 1e-9 * k {
            return Err(SimError::Config(format!(
                "sonar_rate {} must be a whole multiple of control_rate {}",
                self.sonar_rate, self.control_rate
            )));
        }
        Ok(kr as usize)
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.control_rate
    }

    pub fn start_point(&self) -> Point {
        Point::new(self.start[0], self.start[1])
    }

    pub fn initial(&self) -> Result<HyperParams, SimError> {
        let [a, b, c] = self.initial_hypers;
        HyperParams::new(a, b, c).map_err(|e| SimError::Config(format!("initial_hypers: {e}")))
    }

    pub fn ffcb(&self) -> FfcbConfig {
        FfcbConfig {
            z_t: self.z_t,
            r: self.r,
            loop_buffer: self.loop_buffer,
            psi_adj: self.psi_adj,
            epsilon_depth: self.epsilon_depth,
            ema_half_life: self.ema_half_life,
            closure_radius: self.closure_radius,
        }
    }

    pub fn turn_rate(&self) -> f64 {
        self.max_turn_rate.unwrap_or(f64::INFINITY)
    }

    pub fn waypoint_tolerance(&self) -> f64 {
        self.waypoint_tolerance
            .unwrap_or(self.speed / self.control_rate)
    }

    pub fn std_probe_spacing(&self) -> f64 {
        self.std_probe_spacing.unwrap_or(self.delta)
    }
}

/// Polygon given by file path (relative to the scenario file) or inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolygonSource {
    Path(PathBuf),
    Inline(Vec<[f64; 2]>),
}

/// A complete, self-contained mission description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub polygon: PolygonSource,
    pub field: BathymetryField,
    #[serde(default)]
    pub mission: MissionConfig,
}

/// Scenario with its polygon loaded and every input validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub scenario: Scenario,
    pub polygon: Polygon,
}

impl ResolvedScenario {
    /// Canonical JSON of the scenario with the polygon inlined.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(&self.scenario).expect("scenario serializes")
    }

    /// SHA-256 of [`canonical_json`](Self::canonical_json), hex encoded.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

/// Top-level scenario keys; every other bare key addresses `[mission]`.
const ROOT_KEYS: [&str; 2] = ["name", "polygon"];

/// Applies `key=value` overrides to a parsed TOML document. Bare keys other
/// than `name` and `polygon` address `[mission]`; dotted keys give the full
/// path. Values are parsed as TOML, falling back to a plain string.
pub fn apply_overrides(doc: &mut toml::Table, overrides: &[String]) -> Result<(), SimError> {
    for ov in overrides {
        let (key, raw) = ov
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("override '{ov}' is not key=value")))?;
        let key = key.trim();
        let value: toml::Value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        {
            Ok(mut t) => t.remove("v").expect("parsed key"),
            Err(_) => toml::Value::String(raw.trim().to_string()),
        };
        let path: Vec<&str> = if key.contains('.') {
            key.split('.').collect()
        } else if ROOT_KEYS.contains(&key) {
            vec![key]
        } else {
            vec!["mission", key]
        };
        let (last, parents) = path.split_last().expect("non-empty key");
        let mut table = &mut *doc;
        for p in parents {
            let entry = table
                .entry(p.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry.as_table_mut().ok_or_else(|| {
                SimError::Config(format!("override '{key}': '{p}' is not a table"))
            })?;
        }
        table.insert(last.to_string(), value);
    }
    Ok(())
}

/// Parses scenario TOML, applies overrides and loads the polygon; relative
/// polygon paths are taken from `base_dir`.
pub fn parse_scenario(
    text: &str,
    base_dir: &Path,
    overrides: &[String],
) -> Result<ResolvedScenario, SimError> {
    let mut doc: toml::Table =
        toml::from_str(text).map_err(|e| SimError::Config(format!("scenario: {e}")))?;
    apply_overrides(&mut doc, overrides)?;
    let mut scenario: Scenario = doc
        .try_into()
        .map_err(|e: toml::de::Error| SimError::Config(format!("scenario: {e}")))?;
    resolve(&mut scenario, base_dir).map(|polygon| ResolvedScenario { scenario, polygon })
}

/// Reads a scenario from a TOML file, or from the `scenario` entry of a run
/// manifest (`.json`).
pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<ResolvedScenario, SimError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    if path.extension().is_some_and(|e| e == "json") {
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        let sc = v
            .get("scenario")
            .ok_or_else(|| SimError::Config(format!("{}: no 'scenario' entry", path.display())))?;
        // round-trip through TOML so overrides apply the same way
        let mut doc: toml::Table = serde_json::from_value::<toml::Table>(sc.clone())
            .map_err(|e| SimError::Config(format!("{}: {e}", path.display())))?;
        apply_overrides(&mut doc, overrides)?;
        let mut scenario: Scenario = doc
            .try_into()
            .map_err(|e: toml::de::Error| SimError::Config(format!("scenario: {e}")))?;
        return resolve(&mut scenario, base).map(|polygon| ResolvedScenario { scenario, polygon });
    }
    parse_scenario(&text, base, overrides)
}

fn resolve(scenario: &mut Scenario, base_dir: &Path) -> Result<Polygon, SimError> {
    scenario.field.validate()?;
    scenario.mission.validate()?;
    let polygon = match &scenario.polygon {
        PolygonSource::Path(p) => {
            let full = if p.is_absolute() {
                p.clone()
            } else {
                base_dir.join(p)
            };
            let text = std::fs::read_to_string(&full)
                .map_err(|e| SimError::Io(format!("polygon {}: {e}", full.display())))?;
            parse_polygon(&text)?
        }
        PolygonSource::Inline(v) => {
            Polygon::new(v.iter().map(|&[x, y]| Point::new(x, y)).collect())?
        }
    };
    scenario.polygon =
        PolygonSource::Inline(polygon.vertices().iter().map(|p| [p.x, p.y]).collect());
    Ok(polygon)
}
