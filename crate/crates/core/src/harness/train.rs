use super::{derive_rng_stream, AlgoChoice, Precision, RunConfig};
use crate::agents::train::Learner;
use crate::agents::{save_agent, train_episode, AgentSAC, AgentTD3, Algorithm, EpisodeLog, Trainer};
use crate::scalar::Scalar;
use crate::sim::{Env, EnvMode, GoalSampler};
use anyhow::{bail, Context, Result};
use rand::Rng;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

pub const TRAIN_LOG: &str = "train_log.jsonl";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub episodes: u32,
    pub total_steps: u64,
    pub goals_reached: u64,
    pub log_path: PathBuf,
    pub final_checkpoint: PathBuf,
}

/// Trains for `hyperparams.max_eps` episodes, writing the JSONL log,
/// periodic checkpoints under `checkpoints/ep_NNNNN` and the last one under
/// `checkpoints/final`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let algo = match cfg.algorithm {
        AlgoChoice::Learned(a) => a,
        AlgoChoice::Bba => bail!("the bba controller has nothing to train"),
    };
    fs::create_dir_all(&cfg.out).with_context(|| format!("creating output directory {}", cfg.out.display()))?;
    fs::write(cfg.out.join("config.toml"), cfg.to_toml()).context("writing resolved config")?;
    let seed: u64 = derive_rng_stream(cfg.seed, "agent-init").random();
    let hp = cfg.hyperparams;
    match (cfg.training.precision, algo) {
        (Precision::F32, Algorithm::DocrlD) => run(cfg, AgentTD3::<f32>::new(hp, seed)),
        (Precision::F64, Algorithm::DocrlD) => run(cfg, AgentTD3::<f64>::new(hp, seed)),
        (Precision::F32, Algorithm::DocrlS) => run(cfg, AgentSAC::<f32>::new(hp, seed)),
        (Precision::F64, Algorithm::DocrlS) => run(cfg, AgentSAC::<f64>::new(hp, seed)),
    }
}

fn sampler(cfg: &RunConfig, episode: u32) -> GoalSampler {
    GoalSampler {
        max_distance: cfg.training.goal_radius(episode),
        cross_medium_prob: cfg.training.cross_medium_prob,
        ..Default::default()
    }
}

fn run<T: Scalar, L: Learner<T>>(cfg: &RunConfig, agent: L) -> Result<TrainSummary> {
    let hp = cfg.hyperparams;
    let scenario = cfg.scenario();
    let world = cfg.scenario_world();
    let start = scenario.start();
    let mut env = Env::new(world.clone(), cfg.reward, EnvMode::Training(sampler(cfg, 0)))?;
    let mut rng = derive_rng_stream(cfg.seed, "train");
    let mut trainer = Trainer::new(agent, hp.buffer_capacity);

    let log_path = cfg.out.join(TRAIN_LOG);
    let file = fs::File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?;
    let mut log = BufWriter::new(file);
    let ckpt_root = cfg.out.join("checkpoints");
    let mut goals_reached = 0u64;

    for ep in 0..hp.max_eps {
        let s = sampler(cfg, ep);
        env.set_mode(EnvMode::Training(s));
        let goal = if rng.random::<f64>() < cfg.training.task_goal_prob {
            scenario.goal()
        } else {
            s.sample(&world, start, &mut rng)
        };
        let rec: EpisodeLog = train_episode(&mut trainer, &mut env, start, goal, &mut rng)?;
        goals_reached += u64::from(rec.goals_reached);
        serde_json::to_writer(&mut log, &rec)?;
        log.write_all(b"\n")?;
        log.flush()?;
        if (ep + 1) % cfg.training.checkpoint_every == 0 {
            let dir = ckpt_root.join(format!("ep_{:05}", ep + 1));
            save_agent(&trainer.agent, &dir, trainer.episodes, trainer.total_steps)?;
        }
    }
    log.flush()?;
    let final_checkpoint = ckpt_root.join("final");
    save_agent(&trainer.agent, &final_checkpoint, trainer.episodes, trainer.total_steps)?;
    Ok(TrainSummary {
        episodes: trainer.episodes,
        total_steps: trainer.total_steps,
        goals_reached,
        log_path,
        final_checkpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{load_agent, Hyperparams, LoadedAgent};

    fn tiny(out: PathBuf, start_steps: u64) -> RunConfig {
        RunConfig {
            out,
            hyperparams: Hyperparams {
                hidden_dim: 6,
                batch: 4,
                seq_len: 2,
                max_steps: 15,
                max_eps: 2,
                start_steps,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn two_episodes_two_records_one_final_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let s = cmd_train(&tiny(dir.path().to_path_buf(), 5)).unwrap();
        let text = fs::read_to_string(&s.log_path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(s.final_checkpoint.join("agent.json").exists());
        let ckpts: Vec<_> = fs::read_dir(dir.path().join("checkpoints")).unwrap().collect();
        assert_eq!(ckpts.len(), 1);
    }

    #[test]
    fn huge_start_steps_keeps_initial_weights() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(dir.path().to_path_buf(), 1_000_000_000);
        let s = cmd_train(&cfg).unwrap();
        let seed: u64 = derive_rng_stream(cfg.seed, "agent-init").random();
        let init = AgentTD3::<f64>::new(cfg.hyperparams, seed);
        match load_agent::<f64>(&s.final_checkpoint).unwrap() {
            LoadedAgent::Td3(a) => {
                assert!(a.actor.params.max_abs_diff(&init.actor.params) < 1e-6);
                assert!(a.critic1.params.max_abs_diff(&init.critic1.params) < 1e-6);
            }
            LoadedAgent::Sac(_) => panic!("wrong agent"),
        }
    }

    #[test]
    fn bba_cannot_train() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            algorithm: AlgoChoice::Bba,
            ..tiny(dir.path().to_path_buf(), 0)
        };
        assert!(cmd_train(&cfg).is_err());
    }
}
