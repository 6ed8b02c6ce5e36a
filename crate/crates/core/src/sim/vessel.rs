use serde::{Deserialize, Serialize};

use crate::contour::Pose;
use crate::geometry::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VesselState {
    pub pose: Pose,
    /// m/s
    pub speed: f64,
    /// Mission clock (s).
    pub clock: f64,
}

/// Turns toward `psi_d` by at most `max_turn_rate·dt` along the shorter way,
/// then advances `speed·dt` along the new heading. An infinite rate snaps the
/// heading.
pub fn step_vessel(state: &VesselState, psi_d: f64, dt: f64, max_turn_rate: f64) -> VesselState {
    let err = wrap_angle(psi_d - state.pose.psi);
    let cap = max_turn_rate * dt;
    let turn = if cap.is_finite() {
        err.clamp(-cap, cap)
    } else {
        err
    };
    let psi = wrap_angle(state.pose.psi + turn);
    let p = state.pose.position().offset(psi, state.speed * dt);
    VesselState {
        pose: Pose::new(p.x, p.y, psi),
        speed: state.speed,
        clock: state.clock + dt,
    }
}
