//! Synthetic seafloor, kinematic vessel and the mission loop that drives the
//! depth model, contour controller and coverage planner together.
//!
//! The simulation clock is single threaded. Hyper-parameter refits run on a
//! worker thread against a thinned copy of the data and are swapped in at the
//! next control tick, so a fixed seed always replays the same mission.

mod config;
mod field;
mod io;
mod mission;
mod vessel;

use thiserror::Error;

use crate::contour::ContourError;
use crate::coverage::CoverageError;
use crate::geometry::GeometryError;
use crate::gp::GpError;

pub use config::{
    apply_overrides, load_scenario, parse_scenario, MissionConfig, PolygonSource, ResolvedScenario,
    Scenario,
};
pub use field::{
    min_depth_on_lattice, sonar_sample, true_depth, BathymetryField, Bump, DepthGrid, FieldKind,
    Plane,
};
pub use io::{write_mission_log, Manifest, RunStatus};
pub use mission::{
    run_mission, uncertainty, HyperRecord, Measurement, MissionAbort, MissionLog, Phase,
    PoseRecord, Uncertainty,
};
pub use vessel::{step_vessel, VesselState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("numerical: {0}")]
    Numerical(String),
    #[error(transparent)]
    Contour(#[from] ContourError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error("position ({x:.3}, {y:.3}) is outside the depth field")]
    OutOfField { x: f64, y: f64 },
    #[error("simulated time limit of {0} s reached")]
    Timeout(f64),
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}
