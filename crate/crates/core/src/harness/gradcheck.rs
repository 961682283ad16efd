//! Finite-difference verification of every training loss.

use crate::agents::losses::{critic_loss, sac_actor_loss, td3_actor_loss};
use crate::agents::{standard_normal_noise, AgentSAC, AgentTD3, Hyperparams, SeqBatch};
use crate::nn::{grad_check, Matrix, Network, ParamSet};
use crate::sim::{ACT_DIM, OBS_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const GRAD_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckRow {
    pub loss: String,
    pub seq_len: usize,
    pub coords: usize,
    pub max_rel_error: f64,
    /// Parameter array and index of the worst coordinate.
    pub worst: Option<(String, usize)>,
}

/// Random batch whose last row is shorter than `seq_len` (padded) when
/// `seq_len > 1`.
pub fn random_batch(batch: usize, seq_len: usize, rng: &mut ChaCha8Rng) -> SeqBatch<f64> {
    let mut b = SeqBatch::zeros(batch, seq_len);
    for t in 0..seq_len {
        b.obs[t] = Matrix::from_fn(batch, OBS_DIM, |_, _| rng.random_range(-1.0..1.0));
        b.next_obs[t] = Matrix::from_fn(batch, OBS_DIM, |_, _| rng.random_range(-1.0..1.0));
        b.actions[t] = Matrix::from_fn(batch, ACT_DIM, |_, _| rng.random_range(-1.0..1.0));
        for r in 0..batch {
            b.rewards[t][r] = rng.random_range(-1.0..1.0);
            let padded = r + 1 == batch && seq_len > 1 && t >= seq_len / 2;
            b.mask[t][r] = if padded { 0.0 } else { 1.0 };
        }
    }
    b
}

fn with_params(net: &Network<f64>, p: &ParamSet<f64>) -> Network<f64> {
    Network {
        spec: net.spec,
        params: p.clone(),
    }
}

/// Checks the deterministic critic and actor losses and the stochastic
/// critic and actor losses for each sequence length. `coords` bounds the
/// number of randomly chosen coordinates per check.
pub fn run_grad_checks(hidden: usize, seq_lens: &[usize], coords: usize, seed: u64) -> Vec<GradCheckRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hp = Hyperparams {
        hidden_dim: hidden,
        ..Default::default()
    };
    let td3 = AgentTD3::<f64>::new(hp, rng.random());
    let sac = AgentSAC::<f64>::new(hp, rng.random());
    let mut rows = Vec::new();
    for &l in seq_lens {
        let batch = random_batch(3, l, &mut rng);
        let mut push = |loss: &str, r: crate::nn::GradCheckReport| {
            rows.push(GradCheckRow {
                loss: loss.to_string(),
                seq_len: l,
                coords: r.coords_checked,
                max_rel_error: r.max_rel_error,
                worst: r.worst,
            })
        };

        let targets = td3.targets(&batch, &mut rng);
        let (_, g) = critic_loss(&td3.critic1, &batch, &targets);
        let r = grad_check(
            &td3.critic1.params,
            &g,
            |p| critic_loss(&with_params(&td3.critic1, p), &batch, &targets).0,
            GRAD_EPS,
            coords,
            rng.random(),
        );
        push("docrl-d critic", r);

        let (_, g) = td3_actor_loss(&td3.actor, &td3.critic1, &batch);
        let r = grad_check(
            &td3.actor.params,
            &g,
            |p| td3_actor_loss(&with_params(&td3.actor, p), &td3.critic1, &batch).0,
            GRAD_EPS,
            coords,
            rng.random(),
        );
        push("docrl-d actor", r);

        let targets = sac.targets(&batch, &mut rng);
        let (_, g) = critic_loss(&sac.critic1, &batch, &targets);
        let r = grad_check(
            &sac.critic1.params,
            &g,
            |p| critic_loss(&with_params(&sac.critic1, p), &batch, &targets).0,
            GRAD_EPS,
            coords,
            rng.random(),
        );
        push("docrl-s critic", r);

        let noise = standard_normal_noise::<f64, _>(batch.batch, l, &mut rng);
        let alpha = hp.sac_alpha;
        let (_, g) = sac_actor_loss(&sac.actor, &sac.critic1, &sac.critic2, &batch, &noise, alpha);
        let r = grad_check(
            &sac.actor.params,
            &g,
            |p| sac_actor_loss(&with_params(&sac.actor, p), &sac.critic1, &sac.critic2, &batch, &noise, alpha).0,
            GRAD_EPS,
            coords,
            rng.random(),
        );
        push("docrl-s actor", r);
    }
    rows
}
