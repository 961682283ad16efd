//! Experiment driver: configuration, seeding, training, evaluation,
//! trajectory post-processing and gradient checks.

pub mod eval;
pub mod gradcheck;
pub mod replay;
pub mod train;

pub use eval::{cmd_eval, EvalMetrics, EvalReport, TrialResult};
pub use gradcheck::{run_grad_checks, GradCheckRow};
pub use replay::{cmd_replay, ReplaySummary, TrajectoryRow};
pub use train::{cmd_train, TrainSummary};

use crate::agents::{Algorithm, Hyperparams};
use crate::bba::BbaConfig;
use crate::sim::scenario::{Scenario, ScenarioKind};
use crate::sim::{RewardConfig, WorldConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Controller selected for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AlgoChoice {
    Learned(Algorithm),
    Bba,
}

impl fmt::Display for AlgoChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgoChoice::Learned(a) => a.fmt(f),
            AlgoChoice::Bba => f.write_str("bba"),
        }
    }
}

impl FromStr for AlgoChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "bba" {
            return Ok(AlgoChoice::Bba);
        }
        s.parse::<Algorithm>()
            .map(AlgoChoice::Learned)
            .map_err(|_| format!("unknown algorithm `{s}` (expected docrl-d, docrl-s or bba)"))
    }
}

impl TryFrom<String> for AlgoChoice {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<AlgoChoice> for String {
    fn from(a: AlgoChoice) -> String {
        a.to_string()
    }
}

/// Arithmetic used for network training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

/// Goal placement during training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub precision: Precision,
    /// Maximum start-to-goal distance (m) of sampled goals in episode 0;
    /// `None` samples over the whole tank from the start.
    pub goal_radius_start: Option<f64>,
    /// Meters added to the goal radius per episode.
    pub goal_radius_growth: f64,
    pub cross_medium_prob: f64,
    /// Chance that an episode's first goal is the scenario goal itself.
    pub task_goal_prob: f64,
    pub checkpoint_every: u32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            precision: Precision::F64,
            goal_radius_start: None,
            goal_radius_growth: 0.0,
            cross_medium_prob: 0.5,
            task_goal_prob: 0.0,
            checkpoint_every: 100,
        }
    }
}

impl TrainingConfig {
    pub fn goal_radius(&self, episode: u32) -> Option<f64> {
        self.goal_radius_start
            .map(|r0| r0 + self.goal_radius_growth * f64::from(episode))
    }
}

/// Everything one `train` or `eval` invocation needs. Read from TOML; every
/// section and field is optional and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub algorithm: AlgoChoice,
    pub scenario: ScenarioKind,
    pub risers: bool,
    pub seed: u64,
    pub out: PathBuf,
    pub trials: u32,
    pub world: WorldConfig,
    pub reward: RewardConfig,
    pub hyperparams: Hyperparams,
    pub training: TrainingConfig,
    pub bba: BbaConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            algorithm: AlgoChoice::Learned(Algorithm::DocrlD),
            scenario: ScenarioKind::A2W,
            risers: true,
            seed: 0,
            out: PathBuf::from("runs/default"),
            trials: 100,
            world: WorldConfig::default(),
            reward: RewardConfig::default(),
            hyperparams: Hyperparams::default(),
            training: TrainingConfig::default(),
            bba: BbaConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = ConfigError::Invalid;
        self.scenario_world().validate().map_err(|e| inv(e.to_string()))?;
        self.reward.validate().map_err(inv)?;
        self.hyperparams.validate().map_err(inv)?;
        self.bba.validate(self.reward.c_o).map_err(inv)?;
        if self.trials == 0 {
            return Err(inv("trials must be at least 1".into()));
        }
        let t = &self.training;
        if !(0.0..=1.0).contains(&t.cross_medium_prob) {
            return Err(inv("training.cross_medium_prob must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&t.task_goal_prob) {
            return Err(inv("training.task_goal_prob must lie in [0, 1]".into()));
        }
        if t.goal_radius_start.is_some_and(|r| !(r > 0.0)) || t.goal_radius_growth < 0.0 {
            return Err(inv("goal radius must be positive and non-shrinking".into()));
        }
        if t.checkpoint_every == 0 {
            return Err(inv("training.checkpoint_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn scenario(&self) -> Scenario {
        Scenario::new(self.scenario, self.risers)
    }

    pub fn scenario_world(&self) -> WorldConfig {
        self.scenario().world(self.world.clone())
    }
}

/// Independent ChaCha stream keyed by `(master_seed, label)`: the seed is
/// the SHA-256 digest of both.
pub fn derive_rng_stream(master_seed: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"docrl-stream\0");
    h.update(master_seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}
