//! Reactive two-behavior baseline: go-to-goal, overridden by obstacle
//! avoidance when something is close ahead.

use crate::sim::{ActionCommand, Observation, D_YAW_MAX, N_BEAMS, V_LIN_MAX, V_Z_MAX};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Slow forward speed used while turning or avoiding.
pub const V_SLOW: f64 = 0.05;
/// Beams `6..14` face forward.
pub const FRONTAL: std::ops::Range<usize> = 6..14;
/// Beams with positive (counter-clockwise) offsets.
pub const LEFT: std::ops::Range<usize> = N_BEAMS / 2..N_BEAMS;
pub const RIGHT: std::ops::Range<usize> = 0..N_BEAMS / 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BbaConfig {
    /// Meters.
    pub safe_range: f64,
    pub k_yaw: f64,
    pub k_z: f64,
    pub slow_heading_deg: f64,
}

impl Default for BbaConfig {
    fn default() -> Self {
        BbaConfig {
            safe_range: 1.0,
            k_yaw: 1.0,
            k_z: 1.0,
            slow_heading_deg: 45.0,
        }
    }
}

impl BbaConfig {
    pub fn validate(&self, c_o: f64) -> Result<(), String> {
        if self.safe_range <= c_o {
            return Err(format!("safe_range {} must exceed the collision distance {c_o}", self.safe_range));
        }
        if self.k_yaw <= 0.0 || self.k_z <= 0.0 {
            return Err("BBA gains must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    GoToGoal,
    Avoid,
}

/// Which behavior fires for this observation.
pub fn arbitrate(obs: &Observation, cfg: &BbaConfig) -> Behavior {
    let ranges = obs.ranges_m();
    let frontal = ranges[FRONTAL].iter().copied().fold(f64::INFINITY, f64::min);
    if frontal > cfg.safe_range {
        Behavior::GoToGoal
    } else {
        Behavior::Avoid
    }
}

pub fn bba_act(obs: &Observation, cfg: &BbaConfig) -> ActionCommand {
    match arbitrate(obs, cfg) {
        Behavior::GoToGoal => {
            let heading = obs.goal_heading * PI;
            let elevation = obs.goal_elevation * PI / 2.0;
            let v_lin = if heading.abs() < cfg.slow_heading_deg.to_radians() {
                V_LIN_MAX
            } else {
                V_SLOW
            };
            ActionCommand {
                v_lin,
                v_z: (cfg.k_z * elevation * V_Z_MAX).clamp(-V_Z_MAX, V_Z_MAX),
                d_yaw: (cfg.k_yaw * heading).clamp(-D_YAW_MAX, D_YAW_MAX),
            }
        }
        Behavior::Avoid => {
            let ranges = obs.ranges_m();
            let left: f64 = ranges[LEFT].iter().sum();
            let right: f64 = ranges[RIGHT].iter().sum();
            let d_yaw = if left >= right { D_YAW_MAX } else { -D_YAW_MAX };
            ActionCommand {
                v_lin: V_SLOW,
                v_z: 0.0,
                d_yaw,
            }
        }
    }
}
