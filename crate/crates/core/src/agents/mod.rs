//! Double-critic recurrent agents: a deterministic TD3-style learner and a
//! stochastic SAC-style learner, both with LSTM actors.

pub mod checkpoint;
pub mod losses;
pub mod replay;
pub mod sac;
pub mod td3;
pub mod train;

pub use checkpoint::{load_agent, load_policy, save_agent, AgentManifest, LoadedAgent};
pub use replay::{ReplayBuffer, SeqBatch, Transition};
pub use sac::AgentSAC;
pub use td3::AgentTD3;
pub use train::{train_episode, EpisodeLog, Trainer};

use crate::nn::{LstmState, Matrix, Network};
use crate::scalar::Scalar;
use crate::sim::{OuParams, ACT_DIM, OBS_DIM};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "docrl-d")]
    DocrlD,
    #[serde(rename = "docrl-s")]
    DocrlS,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::DocrlD => "docrl-d",
            Algorithm::DocrlS => "docrl-s",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "docrl-d" => Ok(Algorithm::DocrlD),
            "docrl-s" => Ok(Algorithm::DocrlS),
            other => Err(format!("unknown algorithm `{other}` (expected docrl-d or docrl-s)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparams {
    pub gamma: f64,
    pub tau: f64,
    pub lr: f64,
    /// Sequences per minibatch.
    pub batch: usize,
    pub seq_len: usize,
    /// Environment steps taken with uniform random actions before learning.
    pub start_steps: u64,
    /// Transitions.
    pub buffer_capacity: usize,
    /// Target policy smoothing, in normalized action units.
    pub target_noise_sigma: f64,
    pub target_noise_clip: f64,
    /// Exploration noise, advanced once per environment step (`dt = 1`).
    pub ou_explore: OuParams,
    pub sac_alpha: f64,
    /// Episode length cap during training; also the horizon of the
    /// policy-delay schedule.
    pub max_steps: u32,
    pub max_eps: u32,
    pub hidden_dim: usize,
    /// LSTM critics when true, feed-forward critics otherwise.
    pub recurrent_critic: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            gamma: 0.99,
            tau: 0.005,
            lr: 1e-3,
            batch: 256,
            seq_len: 8,
            start_steps: 1000,
            buffer_capacity: 100_000,
            target_noise_sigma: 0.05,
            target_noise_clip: 0.125,
            ou_explore: OuParams {
                theta: 0.15,
                sigma: 0.2,
                mu: 0.0,
            },
            sac_alpha: 0.2,
            max_steps: 500,
            max_eps: 1500,
            hidden_dim: 256,
            recurrent_critic: true,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(format!("tau must lie in (0, 1], got {}", self.tau));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err("lr must be positive".into());
        }
        if self.batch == 0 || self.seq_len == 0 {
            return Err("batch and seq_len must be at least 1".into());
        }
        if self.buffer_capacity == 0 {
            return Err("buffer_capacity must be positive".into());
        }
        if self.target_noise_sigma < 0.0 || self.target_noise_clip < 0.0 {
            return Err("target noise sigma and clip must be non-negative".into());
        }
        if self.sac_alpha <= 0.0 {
            return Err("sac_alpha must be positive".into());
        }
        if self.ou_explore.theta < 0.0 || self.ou_explore.sigma < 0.0 {
            return Err("exploration noise parameters must be non-negative".into());
        }
        if self.max_steps == 0 {
            return Err("max_steps must be positive".into());
        }
        if self.hidden_dim == 0 {
            return Err("hidden_dim must be positive".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> crate::nn::AdamConfig {
        crate::nn::AdamConfig {
            lr: self.lr,
            ..Default::default()
        }
    }
}

/// `floor(1 / (0.5 - t / (3 max_steps)))`, evaluated exactly as
/// `floor(6 m / (3 m - 2 t))`.
pub fn policy_update_freq(t: u32, max_steps: u32) -> u32 {
    assert!(max_steps > 0 && t <= max_steps, "policy delay needs 0 <= t <= max_steps");
    let m = u64::from(max_steps);
    let t = u64::from(t);
    (6 * m / (3 * m - 2 * t)) as u32
}

/// Uniform action in `[-1, 1]^3`.
pub fn random_action<R: Rng + ?Sized>(rng: &mut R) -> [f64; ACT_DIM] {
    std::array::from_fn(|_| rng.random_range(-1.0..=1.0))
}

/// Per-step `B x 3` matrices of `N(0, sigma)` draws.
pub fn gaussian_noise<T: Scalar, R: Rng + ?Sized>(
    batch: usize,
    seq_len: usize,
    sigma: f64,
    rng: &mut R,
) -> Vec<Matrix<T>> {
    let normal = Normal::new(0.0, sigma.max(0.0)).expect("non-negative sigma");
    (0..seq_len)
        .map(|_| Matrix::from_fn(batch, ACT_DIM, |_, _| T::from_f64_lossy(normal.sample(rng))))
        .collect()
}

pub fn standard_normal_noise<T: Scalar, R: Rng + ?Sized>(batch: usize, seq_len: usize, rng: &mut R) -> Vec<Matrix<T>> {
    (0..seq_len)
        .map(|_| Matrix::from_fn(batch, ACT_DIM, |_, _| T::from_f64_lossy(rng.sample(StandardNormal))))
        .collect()
}

fn to_scalars<T: Scalar>(obs: &[f64; OBS_DIM]) -> Vec<T> {
    obs.iter().map(|&x| T::from_f64_lossy(x)).collect()
}

/// How a frozen actor turns its head into an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    /// Tanh head used directly.
    Deterministic,
    /// `tanh(mean)`.
    Stochastic,
}

/// Frozen actor for evaluation; shareable across threads, each rollout keeps
/// its own [`LstmState`].
#[derive(Debug, Clone)]
pub struct Policy<T> {
    pub kind: PolicyKind,
    pub actor: Network<T>,
}

impl<T: Scalar> Policy<T> {
    pub fn initial_state(&self) -> LstmState<T> {
        self.actor.zero_state(1)
    }

    /// Greedy (deterministic) or mean (stochastic) action.
    pub fn act(&self, obs: &[f64; OBS_DIM], state: &mut LstmState<T>) -> [f64; ACT_DIM] {
        let y = self.actor.step(&to_scalars(obs), state);
        std::array::from_fn(|j| match self.kind {
            PolicyKind::Deterministic => y[j].to_f64_lossy(),
            PolicyKind::Stochastic => y[j].to_f64_lossy().tanh(),
        })
    }
}
