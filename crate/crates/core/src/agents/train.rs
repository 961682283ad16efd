//! The shared interaction loop.

use super::replay::{ReplayBuffer, Transition};
use super::{random_action, Algorithm, Hyperparams, Policy};
use crate::nn::{LstmState, Network};
use crate::scalar::Scalar;
use crate::sim::{ActionCommand, Env, Goal, SimError, ACT_DIM, OBS_DIM};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_losses: (f64, f64),
    pub actor_loss: Option<f64>,
}

/// What the training loop needs from an agent.
pub trait Learner<T: Scalar> {
    fn algorithm(&self) -> Algorithm;
    fn hyperparams(&self) -> &Hyperparams;
    /// Resets per-episode exploration state.
    fn begin_episode(&mut self);
    fn initial_state(&self) -> LstmState<T>;
    fn explore_action(&mut self, obs: &[f64; OBS_DIM], state: &mut LstmState<T>, rng: &mut ChaCha8Rng)
        -> [f64; ACT_DIM];
    /// One gradient step on critics, plus the actor and targets when the
    /// policy-delay schedule fires at `t_in_episode`.
    fn update(&mut self, buffer: &ReplayBuffer, t_in_episode: u32, rng: &mut ChaCha8Rng) -> UpdateStats;
    /// Every network, in checkpoint order.
    fn networks(&self) -> Vec<(&'static str, &Network<T>)>;
    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Network<T>)>;
    fn policy(&self) -> Policy<T>;
}

/// One JSONL training-log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: u32,
    pub steps: u32,
    pub cum_reward: f64,
    pub goals_reached: u32,
    pub collided: bool,
    pub wall_sec: f64,
}

/// Agent plus the state that persists across episodes.
#[derive(Debug, Clone)]
pub struct Trainer<L> {
    pub agent: L,
    pub buffer: ReplayBuffer,
    /// Environment steps over all episodes.
    pub total_steps: u64,
    pub episodes: u32,
}

impl<L> Trainer<L> {
    pub fn new(agent: L, buffer_capacity: usize) -> Self {
        Trainer {
            agent,
            buffer: ReplayBuffer::new(buffer_capacity),
            total_steps: 0,
            episodes: 0,
        }
    }
}

/// Runs one training episode from `start` toward `goal`.
///
/// Actions are uniform random until `start_steps` environment steps have
/// been taken overall; after that every step is followed by one update.
/// The episode ends on termination or after `max_steps` steps; the latter is
/// a truncation and is stored with `done = false`.
pub fn train_episode<T: Scalar, L: Learner<T>>(
    trainer: &mut Trainer<L>,
    env: &mut Env,
    start: [f64; 3],
    goal: Goal,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeLog, SimError> {
    let clock = Instant::now();
    let hp = *trainer.agent.hyperparams();
    let episode = trainer.episodes;
    let mut obs = env.reset(start, goal, rng.random())?.to_vec();
    trainer.agent.begin_episode();
    let mut state = trainer.agent.initial_state();
    let mut log = EpisodeLog {
        episode,
        steps: 0,
        cum_reward: 0.0,
        goals_reached: 0,
        collided: false,
        wall_sec: 0.0,
    };
    let c_o = env.reward_config().c_o;
    for t in 0..hp.max_steps {
        let a = if trainer.total_steps < hp.start_steps {
            random_action(rng)
        } else {
            trainer.agent.explore_action(&obs, &mut state, rng)
        };
        let out = env.step(ActionCommand::denormalize(a))?;
        let s_next = out.observation.to_vec();
        trainer.buffer.store(Transition {
            s: obs,
            a,
            r: out.reward,
            s_next,
            done: out.terminated,
            episode_id: u64::from(episode),
            step_in_episode: t,
        });
        trainer.total_steps += 1;
        log.steps += 1;
        log.cum_reward += out.reward;
        if out.success {
            log.goals_reached += 1;
        }
        if out.terminated && !out.success && (out.info.surface_contact || out.info.min_range < c_o) {
            log.collided = true;
        }
        if trainer.total_steps > hp.start_steps {
            trainer.agent.update(&trainer.buffer, t, rng);
        }
        obs = s_next;
        if out.terminated {
            break;
        }
    }
    trainer.episodes += 1;
    log.wall_sec = clock.elapsed().as_secs_f64();
    Ok(log)
}
