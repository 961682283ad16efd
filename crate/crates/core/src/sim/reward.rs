use serde::{Deserialize, Serialize};

/// Constants of the binary arrive/collide reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub r_arrive: f64,
    pub r_collide: f64,
    /// Arrival radius (m).
    pub c_d: f64,
    /// Obstacle clearance (m).
    pub c_o: f64,
    pub step_limit: u32,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            r_arrive: 100.0,
            r_collide: -10.0,
            c_d: 0.5,
            c_o: 0.5,
            step_limit: 500,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c_d > 0.0) || !(self.c_o > 0.0) {
            return Err("reward c_d and c_o must be positive".into());
        }
        if self.step_limit == 0 {
            return Err("reward step_limit must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardSignal {
    pub reward: f64,
    pub terminated: bool,
    pub success: bool,
}

/// Arrival wins over collision and over the step limit; when neither branch
/// fires the reward is zero.
pub fn compute_reward(d_t: f64, min_range: f64, step_index: u32, cfg: &RewardConfig) -> RewardSignal {
    if d_t < cfg.c_d {
        RewardSignal {
            reward: cfg.r_arrive,
            terminated: true,
            success: true,
        }
    } else if min_range < cfg.c_o || step_index >= cfg.step_limit {
        RewardSignal {
            reward: cfg.r_collide,
            terminated: true,
            success: false,
        }
    } else {
        RewardSignal {
            reward: 0.0,
            terminated: false,
            success: false,
        }
    }
}
