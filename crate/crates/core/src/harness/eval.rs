use super::replay::{write_trajectory, TrajectoryRow};
use super::{derive_rng_stream, AlgoChoice, RunConfig};
use crate::agents::{load_policy, Policy};
use crate::bba::{bba_act, BbaConfig};
use crate::sim::{ActionCommand, Env, EnvMode, Goal, SimError, WorldConfig};
use anyhow::{bail, Context, Result};
use rand::Rng;
use rayon::prelude::*;
use std::fs;
use std::path::Path;

pub const METRICS_HEADER: [&str; 8] = [
    "algo",
    "scenario",
    "trials",
    "successes",
    "t_air_mean",
    "t_air_std",
    "t_water_mean",
    "t_water_std",
];

/// Aggregate over trials; timing statistics cover successful trials only.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    pub trials: u32,
    pub successes: u32,
    pub t_air_mean: Option<f64>,
    /// Sample standard deviation; `None` with fewer than two successes.
    pub t_air_std: Option<f64>,
    pub t_water_mean: Option<f64>,
    pub t_water_std: Option<f64>,
}

fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (Some(mean), None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

impl EvalMetrics {
    pub fn from_trials(trials: &[TrialResult]) -> Self {
        let ok: Vec<&TrialResult> = trials.iter().filter(|t| t.success).collect();
        let (t_air_mean, t_air_std) = mean_std(&ok.iter().map(|t| t.t_air).collect::<Vec<_>>());
        let (t_water_mean, t_water_std) = mean_std(&ok.iter().map(|t| t.t_water).collect::<Vec<_>>());
        EvalMetrics {
            trials: trials.len() as u32,
            successes: ok.len() as u32,
            t_air_mean,
            t_air_std,
            t_water_mean,
            t_water_std,
        }
    }

    pub fn success_rate(&self) -> f64 {
        f64::from(self.successes) / f64::from(self.trials.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: u32,
    pub success: bool,
    pub collided: bool,
    pub steps: u32,
    pub steps_air: u32,
    pub steps_water: u32,
    pub t_air: f64,
    pub t_water: f64,
    pub final_reward: f64,
    pub trajectory: Vec<TrajectoryRow>,
}

/// A controller that can drive one evaluation episode.
#[derive(Debug, Clone)]
pub enum Controller {
    Learned(Policy<f64>),
    Bba(BbaConfig),
}

impl Controller {
    fn name(&self) -> &'static str {
        match self {
            Controller::Learned(p) => match p.kind {
                crate::agents::PolicyKind::Deterministic => "docrl-d",
                crate::agents::PolicyKind::Stochastic => "docrl-s",
            },
            Controller::Bba(_) => "bba",
        }
    }
}

/// Runs one evaluation episode: greedy/mean actions, no exploration noise,
/// ending on arrival, collision or the step limit.
pub fn run_trial(
    controller: &Controller,
    world: &WorldConfig,
    cfg: &RunConfig,
    start: [f64; 3],
    goal: Goal,
    trial: u32,
) -> Result<TrialResult, SimError> {
    let mut env = Env::new(world.clone(), cfg.reward, EnvMode::Evaluation)?;
    let env_seed: u64 = derive_rng_stream(cfg.seed, &format!("trial-{trial}")).random();
    let mut obs = env.reset(start, goal, env_seed)?;
    let mut state = match controller {
        Controller::Learned(p) => Some(p.initial_state()),
        Controller::Bba(_) => None,
    };
    let c_o = cfg.reward.c_o;
    let mut rows = Vec::new();
    let mut medium = obs.medium;
    loop {
        let cmd = match (controller, state.as_mut()) {
            (Controller::Learned(p), Some(st)) => ActionCommand::denormalize(p.act(&obs.to_vec(), st)),
            (Controller::Bba(b), _) => bba_act(&obs, b),
            (Controller::Learned(_), None) => unreachable!("learned controllers carry a state"),
        };
        let out = env.step(cmd)?;
        let st = env.state();
        rows.push(TrajectoryRow {
            step: out.info.step_index,
            t: f64::from(out.info.step_index) * world.dt,
            x: st.position[0],
            y: st.position[1],
            z: st.position[2],
            yaw: st.yaw,
            medium,
            reward: out.reward,
            min_range: out.info.min_range,
            d_goal: out.info.d_goal,
        });
        medium = out.info.medium;
        obs = out.observation;
        if out.terminated {
            let (t_air, t_water) = env.sim_time();
            return Ok(TrialResult {
                trial,
                success: out.success,
                collided: !out.success && (out.info.surface_contact || out.info.min_range < c_o),
                steps: out.info.step_index,
                steps_air: out.info.steps_air,
                steps_water: out.info.steps_water,
                t_air,
                t_water,
                final_reward: out.reward,
                trajectory: rows,
            });
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub algo: String,
    pub scenario: String,
    pub metrics: EvalMetrics,
    pub trials: Vec<TrialResult>,
}

/// Loads the controller named by the config (and `checkpoint` for learned
/// agents), runs `cfg.trials` trials in parallel and writes `metrics.csv`,
/// `trials.csv` and `trajectory.csv` (trial 0) under `cfg.out`.
pub fn cmd_eval(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<EvalReport> {
    cfg.validate()?;
    let controller = match (cfg.algorithm, checkpoint) {
        (AlgoChoice::Bba, _) => Controller::Bba(cfg.bba),
        (AlgoChoice::Learned(want), Some(dir)) => {
            let (algo, policy) =
                load_policy::<f64>(dir).with_context(|| format!("loading checkpoint {}", dir.display()))?;
            if algo != want {
                bail!("checkpoint {} holds a {algo} agent, but {want} was requested", dir.display());
            }
            Controller::Learned(policy)
        }
        (AlgoChoice::Learned(a), None) => bail!("evaluating {a} needs --checkpoint"),
    };
    let report = evaluate(&controller, cfg)?;
    write_report(&report, &cfg.out)?;
    Ok(report)
}

pub fn evaluate(controller: &Controller, cfg: &RunConfig) -> Result<EvalReport> {
    let scenario = cfg.scenario();
    let world = cfg.scenario_world();
    let trials: Vec<TrialResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| run_trial(controller, &world, cfg, scenario.start(), scenario.goal(), k))
        .collect::<Result<_, _>>()?;
    Ok(EvalReport {
        algo: controller.name().to_string(),
        scenario: scenario.name(),
        metrics: EvalMetrics::from_trials(&trials),
        trials,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_default()
}

pub fn write_report(report: &EvalReport, out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    let m = &report.metrics;
    let mut w = csv::Writer::from_path(out.join("metrics.csv"))?;
    w.write_record(METRICS_HEADER)?;
    w.write_record([
        report.algo.clone(),
        report.scenario.clone(),
        m.trials.to_string(),
        m.successes.to_string(),
        opt(m.t_air_mean),
        opt(m.t_air_std),
        opt(m.t_water_mean),
        opt(m.t_water_std),
    ])?;
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("trials.csv"))?;
    w.write_record([
        "trial",
        "success",
        "collided",
        "steps",
        "t_air",
        "t_water",
        "final_reward",
    ])?;
    for t in &report.trials {
        w.write_record([
            t.trial.to_string(),
            t.success.to_string(),
            t.collided.to_string(),
            t.steps.to_string(),
            format!("{:.6}", t.t_air),
            format!("{:.6}", t.t_water),
            format!("{:.6}", t.final_reward),
        ])?;
    }
    w.flush()?;

    if let Some(first) = report.trials.first() {
        write_trajectory(&out.join("trajectory.csv"), &first.trajectory)?;
    }
    Ok(())
}
