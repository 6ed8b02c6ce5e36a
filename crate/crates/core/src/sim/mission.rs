use std::thread::JoinHandle;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sonar_sample, step_vessel, BathymetryField, MissionConfig, SimError, VesselState};
use crate::contour::{boundary_complete, ffcb_step, FfcbState, Pose, TraceRow};
use crate::coverage::{plan_coverage, polygon_from_trace, PathPlan};
use crate::geometry::{point_in_polygon, Point, Polygon};
use crate::gp::{
    optimize_hypers_on, GpError, GpModel, HyperBounds, HyperFit, HyperParams, OptimizerOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Init,
    Contour,
    Coverage,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Contour => "contour",
            Phase::Coverage => "coverage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub depth: f64,
}

/// One hyper-parameter estimate: started on a snapshot at `t_start`,
/// swapped into the live model at `t_applied`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperRecord {
    pub t_start: f64,
    pub t_applied: f64,
    pub n_points: usize,
    pub hypers: HyperParams,
    pub lml: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Posterior uncertainty of the noise-free depth on a probe grid inside the
/// traced polygon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub probes: usize,
    pub mean_std: f64,
    pub max_std: f64,
    pub sigma_f: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MissionLog {
    pub poses: Vec<PoseRecord>,
    pub measurements: Vec<Measurement>,
    pub ffcb: Vec<TraceRow>,
    pub hypers: Vec<HyperRecord>,
    pub b_cont: Vec<Point>,
    /// Distance from the closing pose to the earlier trace point it met.
    pub closure_gap: Option<f64>,
    pub traced_polygon: Option<Polygon>,
    pub plan: Option<PathPlan>,
    pub init_end: Option<f64>,
    pub contour_end: Option<f64>,
    pub coverage_end: Option<f64>,
    pub uncertainty: Option<Uncertainty>,
    pub final_hypers: Option<HyperParams>,
}

impl MissionLog {
    pub fn sim_time(&self) -> f64 {
        self.poses.last().map_or(0.0, |p| p.t)
    }

    /// Whether the contour trace ended by meeting itself.
    pub fn b_cont_closed(&self) -> bool {
        self.closure_gap.is_some()
    }
}

/// A mission that stopped early, with everything logged up to that point.
#[derive(Debug)]
pub struct MissionAbort {
    pub error: SimError,
    pub log: Box<MissionLog>,
}

impl std::fmt::Display for MissionAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "mission aborted at t = {:.0} s: {}",
            self.log.sim_time(),
            self.error
        )
    }
}

impl std::error::Error for MissionAbort {}

type RefitJob = JoinHandle<Result<HyperFit, GpError>>;

struct Sim<'a> {
    cfg: &'a MissionConfig,
    field: &'a BathymetryField,
    poly: &'a Polygon,
    vessel: VesselState,
    model: GpModel,
    rng: ChaCha8Rng,
    z_last: f64,
    phase: Phase,
    log: MissionLog,
    pending: Option<(f64, usize, RefitJob)>,
    next_refit: f64,
    bounds: HyperBounds,
}

/// Evenly spaced indices into `0..n`, always keeping the first and last.
fn thin(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    (0..max)
        .map(|i| ((i * (n - 1)) as f64 / (max - 1) as f64).round() as usize)
        .collect()
}

impl<'a> Sim<'a> {
    fn new(
        cfg: &'a MissionConfig,
        field: &'a BathymetryField,
        poly: &'a Polygon,
    ) -> Result<Self, SimError> {
        cfg.validate()?;
        field.validate()?;
        let start = cfg.start_point();
        if !point_in_polygon(start, poly) {
            return Err(SimError::Config(format!(
                "start {start} is outside the bounding polygon"
            )));
        }
        let hypers = cfg.initial()?;
        let model = if cfg.center_mean {
            GpModel::new_centered(hypers)?
        } else {
            GpModel::new(hypers)?
        };
        let bounds = HyperBounds {
            sigma_n2: (cfg.sigma_n2_floor, HyperBounds::default().sigma_n2.1),
            ..HyperBounds::default()
        };
        Ok(Self {
            cfg,
            field,
            poly,
            vessel: VesselState {
                pose: Pose::new(start.x, start.y, cfg.start_heading),
                speed: cfg.speed,
                clock: 0.0,
            },
            model,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            z_last: f64::NAN,
            phase: Phase::Init,
            log: MissionLog::default(),
            pending: None,
            next_refit: f64::INFINITY,
            bounds,
        })
    }

    fn ping(&mut self) -> Result<(), SimError> {
        let p = self.vessel.pose.position();
        let z = sonar_sample(self.field, p, self.cfg.sonar_noise, &mut self.rng)?;
        self.model.append(&[p], &[z])?;
        self.z_last = z;
        self.log.measurements.push(Measurement {
            t: self.vessel.clock,
            x: p.x,
            y: p.y,
            depth: z,
        });
        Ok(())
    }

    fn record_pose(&mut self) {
        let v = &self.vessel;
        self.log.poses.push(PoseRecord {
            t: v.clock,
            x: v.pose.x,
            y: v.pose.y,
            psi: v.pose.psi,
            phase: self.phase,
        });
    }

    /// One control period under heading command `psi_d`, pinging the sonar
    /// at the end of each sub-step.
    fn advance(&mut self, psi_d: f64) -> Result<(), SimError> {
        let k = self.cfg.sonar_substeps()?;
        let dt = self.cfg.dt() / k as f64;
        for _ in 0..k {
            self.vessel = step_vessel(&self.vessel, psi_d, dt, self.cfg.turn_rate());
            self.ping()?;
        }
        self.record_pose();
        if self.vessel.clock > self.cfg.max_time {
            return Err(SimError::Timeout(self.cfg.max_time));
        }
        Ok(())
    }

    fn training_subset(&self) -> (Vec<Point>, Vec<f64>) {
        let xs = self.model.train_x();
        let ys = self.model.train_y();
        let mu = self.model.mean_offset();
        thin(xs.len(), self.cfg.refit_max_points)
            .into_iter()
            .map(|i| (xs[i], ys[i] - mu))
            .unzip()
    }

    fn spawn_refit(&mut self) {
        let (xs, ys) = self.training_subset();
        let n = xs.len();
        let initial = *self.model.hypers();
        let bounds = self.bounds;
        let job = std::thread::spawn(move || {
            optimize_hypers_on(&xs, &ys, initial, &bounds, &OptimizerOptions::default())
        });
        self.pending = Some((self.vessel.clock, n, job));
    }

    fn apply_refit(
        &mut self,
        t_start: f64,
        n: usize,
        fit: Result<HyperFit, GpError>,
    ) -> Result<(), SimError> {
        match fit {
            Ok(fit) => {
                self.model = self.model.with_hypers(fit.hypers)?;
                self.log.hypers.push(HyperRecord {
                    t_start,
                    t_applied: self.vessel.clock,
                    n_points: n,
                    hypers: fit.hypers,
                    lml: fit.lml,
                    iterations: fit.iterations,
                    evaluations: fit.evaluations,
                    converged: fit.converged,
                });
            }
            Err(e) => log::warn!("hyper-parameter refit started at t = {t_start} failed: {e}; keeping current values"),
        }
        Ok(())
    }

    fn collect_refit(&mut self) -> Result<(), SimError> {
        if let Some((t, n, job)) = self.pending.take() {
            let fit = job
                .join()
                .map_err(|_| SimError::Numerical("refit thread panicked".into()))?;
            self.apply_refit(t, n, fit)?;
        }
        Ok(())
    }

    /// Applies a refit started on an earlier tick, then starts one if due.
    fn refit_tick(&mut self) -> Result<(), SimError> {
        self.collect_refit()?;
        let eps = 1e-9 * self.cfg.refit_period;
        if self.vessel.clock + eps >= self.next_refit {
            self.spawn_refit();
            while self.next_refit <= self.vessel.clock + eps {
                self.next_refit += self.cfg.refit_period;
            }
        }
        Ok(())
    }

    fn init_phase(&mut self) -> Result<(), SimError> {
        self.record_pose();
        self.ping()?;
        let omega = self.cfg.speed / self.cfg.init_radius;
        let ticks = (self.cfg.init_duration * self.cfg.control_rate).round() as usize;
        for _ in 0..ticks {
            let psi_d = self.vessel.pose.psi + omega * self.cfg.dt();
            self.advance(psi_d)?;
        }
        let t = self.vessel.clock;
        self.log.init_end = Some(t);
        let (xs, ys) = self.training_subset();
        let fit = optimize_hypers_on(
            &xs,
            &ys,
            self.cfg.initial()?,
            &self.bounds,
            &OptimizerOptions::default(),
        );
        self.apply_refit(t, xs.len(), fit)?;
        self.next_refit = t + self.cfg.refit_period;
        Ok(())
    }

    fn contour_phase(&mut self) -> Result<(), SimError> {
        self.phase = Phase::Contour;
        let ffcb = self.cfg.ffcb();
        let mut state = FfcbState::new();
        let dt = self.cfg.dt();
        loop {
            self.refit_tick()?;
            let pose = self.vessel.pose;
            let out = ffcb_step(
                &mut state,
                &pose,
                self.z_last,
                dt,
                &self.model,
                self.poly,
                &ffcb,
            )?;
            self.log.ffcb.push(TraceRow {
                t: self.vessel.clock,
                x: pose.x,
                y: pose.y,
                psi: pose.psi,
                mode: out.mode,
                z_measured: self.z_last,
                z_predicted: out.z_predicted,
                found_contour: state.found_contour,
            });
            if state.found_contour
                && boundary_complete(
                    &state.b_cont,
                    &pose,
                    ffcb.loop_buffer,
                    ffcb.closure_radius(),
                )
            {
                let eligible = state.b_cont.len().saturating_sub(ffcb.loop_buffer);
                let p = pose.position();
                self.log.closure_gap = state.b_cont[..eligible]
                    .iter()
                    .map(|q| q.dist(p))
                    .min_by(f64::total_cmp);
                break;
            }
            self.log.b_cont.clone_from(&state.b_cont);
            self.advance(out.psi_d)?;
        }
        self.log.b_cont = state.b_cont;
        self.log.contour_end = Some(self.vessel.clock);
        Ok(())
    }

    fn coverage_phase(&mut self) -> Result<(), SimError> {
        self.phase = Phase::Coverage;
        // hypers stay fixed from here on
        self.collect_refit()?;
        self.next_refit = f64::INFINITY;
        let cfg = self.cfg;
        let traced = polygon_from_trace(
            &self.log.b_cont,
            cfg.loop_buffer,
            cfg.ffcb().closure_radius(),
            cfg.delta,
        )?;
        self.log.traced_polygon = Some(traced.clone());
        let plan = plan_coverage(&traced, self.vessel.pose.position(), cfg.delta, cfg.psi_sd)?;
        let targets = plan.points();
        self.log.plan = Some(plan);
        let tol = cfg.waypoint_tolerance();
        let mut idx = 1;
        loop {
            let p = self.vessel.pose.position();
            while idx < targets.len() && p.dist(targets[idx]) <= tol {
                idx += 1;
            }
            if idx == targets.len() {
                break;
            }
            self.advance(p.bearing_to(targets[idx]))?;
        }
        self.log.coverage_end = Some(self.vessel.clock);
        self.log.uncertainty = Some(uncertainty(&self.model, &traced, cfg.std_probe_spacing())?);
        Ok(())
    }

    fn run(&mut self) -> Result<(), SimError> {
        self.init_phase()?;
        self.contour_phase()?;
        self.coverage_phase()
    }
}

/// Latent predictive std over a `spacing` grid of cell-centred probes
/// inside `poly`.
pub fn uncertainty(model: &GpModel, poly: &Polygon, spacing: f64) -> Result<Uncertainty, SimError> {
    let (lo, hi) = poly.bounds();
    let nx = ((hi.x - lo.x) / spacing).ceil() as usize;
    let ny = ((hi.y - lo.y) / spacing).ceil() as usize;
    let probes: Vec<Point> = (0..ny)
        .flat_map(|j| {
            (0..nx).map(move |i| {
                Point::new(
                    lo.x + (i as f64 + 0.5) * spacing,
                    lo.y + (j as f64 + 0.5) * spacing,
                )
            })
        })
        .filter(|&p| point_in_polygon(p, poly))
        .collect();
    let sigma_f = model.hypers().sigma_f2.sqrt();
    if probes.is_empty() {
        return Ok(Uncertainty {
            probes: 0,
            mean_std: 0.0,
            max_std: 0.0,
            sigma_f,
        });
    }
    let std = model.predict_latent(&probes)?.std();
    Ok(Uncertainty {
        probes: probes.len(),
        mean_std: std.iter().sum::<f64>() / std.len() as f64,
        max_std: std.iter().copied().fold(0.0, f64::max),
        sigma_f,
    })
}

/// Runs the full survey: initialization circle, first fit, contour trace
/// with periodic refits, then coverage of the traced region.
pub fn run_mission(
    cfg: &MissionConfig,
    field: &BathymetryField,
    poly: &Polygon,
) -> Result<MissionLog, MissionAbort> {
    let mut sim = match Sim::new(cfg, field, poly) {
        Ok(s) => s,
        Err(error) => {
            return Err(MissionAbort {
                error,
                log: Box::default(),
            })
        }
    };
    let result = sim.run();
    if let Some((_, _, job)) = sim.pending.take() {
        let _ = job.join();
    }
    sim.log.final_hypers = Some(*sim.model.hypers());
    match result {
        Ok(()) => Ok(sim.log),
        Err(error) => Err(MissionAbort {
            error,
            log: Box::new(sim.log),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_ends() {
        assert_eq!(thin(5, 10), vec![0, 1, 2, 3, 4]);
        let t = thin(1000, 300);
        assert_eq!(t.len(), 300);
        assert_eq!((t[0], t[299]), (0, 999));
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}
