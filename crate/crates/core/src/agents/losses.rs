//! Targets, losses and their exact gradients for both agents.
//!
//! Everything here is a pure function of networks, a batch and externally
//! supplied noise, so that targets can be checked against an independent
//! implementation and gradients against finite differences.

use super::replay::SeqBatch;
use crate::nn::{Grads, Matrix, Network};
use crate::scalar::Scalar;
use crate::sim::{ACT_DIM, OBS_DIM};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Floor inside the tanh change-of-variables log term.
pub const SQUASH_EPS: f64 = 1e-6;

/// `[obs_t | act_t]` for every step.
pub fn critic_inputs<T: Scalar>(obs: &[Matrix<T>], actions: &[Matrix<T>]) -> Vec<Matrix<T>> {
    obs.iter().zip(actions).map(|(o, a)| Matrix::hcat(o, a)).collect()
}

fn n_valid<T: Scalar>(mask: &[Vec<T>]) -> T {
    let n = mask.iter().flatten().fold(T::zero(), |acc, &m| acc + m);
    n.max(T::one())
}

/// Column 0 of each `B x 1` output as `[t][b]`.
fn scalar_outputs<T: Scalar>(outs: &[Matrix<T>]) -> Vec<Vec<T>> {
    outs.iter().map(|m| m.data.clone()).collect()
}

/// Masked mean squared error of a critic against fixed targets, with
/// gradients. Targets carry no gradient.
pub fn critic_loss<T: Scalar>(critic: &Network<T>, batch: &SeqBatch<T>, targets: &[Vec<T>]) -> (T, Grads<T>) {
    let inputs = critic_inputs(&batch.obs, &batch.actions);
    let fwd = critic.forward_seq(&inputs, None);
    let nv = n_valid(&batch.mask);
    let mut loss = T::zero();
    let mut d_out = Vec::with_capacity(fwd.outputs.len());
    for (t, q) in fwd.outputs.iter().enumerate() {
        let mut d = Matrix::zeros(q.rows, 1);
        for b in 0..q.rows {
            let m = batch.mask[t][b];
            if m == T::zero() {
                continue;
            }
            let e = q.data[b] - targets[t][b];
            loss += m * e * e;
            d.data[b] = T::two() * m * e / nv;
        }
        d_out.push(d);
    }
    let grads = critic.param_grads(&fwd.cache, &d_out);
    (loss / nv, grads)
}

/// `clamp(actor'(s') + clip(noise, -c, c), -1, 1)` per step.
pub fn td3_next_actions<T: Scalar>(
    actor_target: &Network<T>,
    next_obs: &[Matrix<T>],
    noise: &[Matrix<T>],
    clip: f64,
) -> Vec<Matrix<T>> {
    let c = T::from_f64_lossy(clip);
    let one = T::one();
    actor_target
        .predict_seq(next_obs, None)
        .into_iter()
        .zip(noise)
        .map(|(mut a, n)| {
            for (x, &e) in a.data.iter_mut().zip(&n.data) {
                *x = (*x + e.max(-c).min(c)).max(-one).min(one);
            }
            a
        })
        .collect()
}

/// `r + gamma (1 - done) min(Q1'(s', a'), Q2'(s', a'))` with smoothed `a'`.
pub fn td3_targets_with_noise<T: Scalar>(
    actor_target: &Network<T>,
    critic1_target: &Network<T>,
    critic2_target: &Network<T>,
    batch: &SeqBatch<T>,
    noise: &[Matrix<T>],
    gamma: f64,
    clip: f64,
) -> Vec<Vec<T>> {
    let a_next = td3_next_actions(actor_target, &batch.next_obs, noise, clip);
    let inputs = critic_inputs(&batch.next_obs, &a_next);
    let q1 = scalar_outputs(&critic1_target.predict_seq(&inputs, None));
    let q2 = scalar_outputs(&critic2_target.predict_seq(&inputs, None));
    bootstrap(batch, &q1, &q2, None, gamma, 0.0)
}

fn bootstrap<T: Scalar>(
    batch: &SeqBatch<T>,
    q1: &[Vec<T>],
    q2: &[Vec<T>],
    logp: Option<&[Vec<T>]>,
    gamma: f64,
    alpha: f64,
) -> Vec<Vec<T>> {
    let g = T::from_f64_lossy(gamma);
    let al = T::from_f64_lossy(alpha);
    (0..batch.seq_len)
        .map(|t| {
            (0..batch.batch)
                .map(|b| {
                    let mut next = q1[t][b].min(q2[t][b]);
                    if let Some(lp) = logp {
                        next -= al * lp[t][b];
                    }
                    batch.rewards[t][b] + g * (T::one() - batch.dones[t][b]) * next
                })
                .collect()
        })
        .collect()
}

/// Deterministic policy objective `-mean Q1(s, actor(s))` over valid steps,
/// with gradients for the actor only.
pub fn td3_actor_loss<T: Scalar>(actor: &Network<T>, critic1: &Network<T>, batch: &SeqBatch<T>) -> (T, Grads<T>) {
    let a_fwd = actor.forward_seq(&batch.obs, None);
    let inputs = critic_inputs(&batch.obs, &a_fwd.outputs);
    let c_fwd = critic1.forward_seq(&inputs, None);
    let nv = n_valid(&batch.mask);
    let mut loss = T::zero();
    let mut d_q = Vec::with_capacity(batch.seq_len);
    for (t, q) in c_fwd.outputs.iter().enumerate() {
        let mut d = Matrix::zeros(q.rows, 1);
        for b in 0..q.rows {
            let m = batch.mask[t][b];
            loss -= m * q.data[b];
            d.data[b] = -m / nv;
        }
        d_q.push(d);
    }
    let (_, d_in) = critic1.backward_seq(&c_fwd.cache, &d_q);
    let d_act: Vec<Matrix<T>> = d_in.iter().map(|m| m.col_slice(OBS_DIM, OBS_DIM + ACT_DIM)).collect();
    let grads = actor.param_grads(&a_fwd.cache, &d_act);
    (loss / nv, grads)
}

/// Squashed-Gaussian sample from pre-activation statistics and a standard
/// normal draw. Returns `(action, log_prob)` for one dimension.
pub fn squash_sample<T: Scalar>(mean: T, raw_log_std: T, n: T) -> (T, T) {
    let ls = clamp_log_std(raw_log_std);
    let u = mean + ls.exp() * n;
    let a = u.tanh();
    (a, gaussian_log_prob(n, ls) - squash_correction(a))
}

pub fn clamp_log_std<T: Scalar>(raw: T) -> T {
    raw.max(T::from_f64_lossy(LOG_STD_MIN)).min(T::from_f64_lossy(LOG_STD_MAX))
}

/// `log N(u; mu, sigma)` written in terms of the standardized draw.
pub fn gaussian_log_prob<T: Scalar>(n: T, log_std: T) -> T {
    let half_log_2pi = T::from_f64_lossy(0.5 * (2.0 * std::f64::consts::PI).ln());
    -T::half() * n * n - log_std - half_log_2pi
}

pub fn squash_correction<T: Scalar>(a: T) -> T {
    (T::one() - a * a + T::from_f64_lossy(SQUASH_EPS)).ln()
}

/// Density of `a = tanh(u)`, `u ~ N(mean, e^{log_std})`, including the
/// epsilon floor used by the log-probability.
pub fn squashed_density(a: f64, mean: f64, log_std: f64) -> f64 {
    let u = a.atanh();
    let n = (u - mean) / log_std.exp();
    (gaussian_log_prob(n, log_std) - squash_correction(a)).exp()
}

/// Reparameterized actions and summed log-probs for a sequence batch.
pub struct PolicySample<T> {
    pub actions: Vec<Matrix<T>>,
    pub log_prob: Vec<Vec<T>>,
}

pub fn sac_sample<T: Scalar>(actor: &Network<T>, obs: &[Matrix<T>], noise: &[Matrix<T>]) -> PolicySample<T> {
    sample_from_outputs(&actor.predict_seq(obs, None), noise)
}

fn sample_from_outputs<T: Scalar>(outs: &[Matrix<T>], noise: &[Matrix<T>]) -> PolicySample<T> {
    let mut actions = Vec::with_capacity(outs.len());
    let mut log_prob = Vec::with_capacity(outs.len());
    for (o, n) in outs.iter().zip(noise) {
        let mut a = Matrix::zeros(o.rows, ACT_DIM);
        let mut lp = vec![T::zero(); o.rows];
        for b in 0..o.rows {
            let row = o.row(b);
            for j in 0..ACT_DIM {
                let (aj, lj) = squash_sample(row[j], row[ACT_DIM + j], n.get(b, j));
                a.set(b, j, aj);
                lp[b] += lj;
            }
        }
        actions.push(a);
        log_prob.push(lp);
    }
    PolicySample { actions, log_prob }
}

/// `r + gamma (1 - done) (min Q'(s', a~) - alpha log pi(a~|s'))` with `a~`
/// drawn from the current policy.
#[allow(clippy::too_many_arguments)]
pub fn sac_targets_with_noise<T: Scalar>(
    actor: &Network<T>,
    critic1_target: &Network<T>,
    critic2_target: &Network<T>,
    batch: &SeqBatch<T>,
    noise: &[Matrix<T>],
    gamma: f64,
    alpha: f64,
) -> Vec<Vec<T>> {
    let sample = sac_sample(actor, &batch.next_obs, noise);
    let inputs = critic_inputs(&batch.next_obs, &sample.actions);
    let q1 = scalar_outputs(&critic1_target.predict_seq(&inputs, None));
    let q2 = scalar_outputs(&critic2_target.predict_seq(&inputs, None));
    bootstrap(batch, &q1, &q2, Some(&sample.log_prob), gamma, alpha)
}

/// Stochastic policy objective `mean(alpha log pi(a~|s) - min Q(s, a~))`
/// over valid steps, reparameterized through the fixed `noise`.
pub fn sac_actor_loss<T: Scalar>(
    actor: &Network<T>,
    critic1: &Network<T>,
    critic2: &Network<T>,
    batch: &SeqBatch<T>,
    noise: &[Matrix<T>],
    alpha: f64,
) -> (T, Grads<T>) {
    let al = T::from_f64_lossy(alpha);
    let eps = T::from_f64_lossy(SQUASH_EPS);
    let one = T::one();
    let a_fwd = actor.forward_seq(&batch.obs, None);
    let sample = sample_from_outputs(&a_fwd.outputs, noise);
    let inputs = critic_inputs(&batch.obs, &sample.actions);
    let f1 = critic1.forward_seq(&inputs, None);
    let f2 = critic2.forward_seq(&inputs, None);
    let nv = n_valid(&batch.mask);

    let mut loss = T::zero();
    let mut d1 = Vec::with_capacity(batch.seq_len);
    let mut d2 = Vec::with_capacity(batch.seq_len);
    for t in 0..batch.seq_len {
        let (mut g1, mut g2) = (Matrix::zeros(batch.batch, 1), Matrix::zeros(batch.batch, 1));
        for b in 0..batch.batch {
            let m = batch.mask[t][b];
            let (q1, q2) = (f1.outputs[t].data[b], f2.outputs[t].data[b]);
            loss += m * (al * sample.log_prob[t][b] - q1.min(q2));
            // Subgradient of the min goes to the smaller critic; ties pick the first.
            if q1 <= q2 {
                g1.data[b] = -m / nv;
            } else {
                g2.data[b] = -m / nv;
            }
        }
        d1.push(g1);
        d2.push(g2);
    }
    let (_, din1) = critic1.backward_seq(&f1.cache, &d1);
    let (_, din2) = critic2.backward_seq(&f2.cache, &d2);

    let mut d_out = Vec::with_capacity(batch.seq_len);
    for t in 0..batch.seq_len {
        let o = &a_fwd.outputs[t];
        let mut d = Matrix::zeros(batch.batch, 2 * ACT_DIM);
        for b in 0..batch.batch {
            let w = batch.mask[t][b] / nv;
            if w == T::zero() {
                continue;
            }
            for j in 0..ACT_DIM {
                let a = sample.actions[t].get(b, j);
                let n = noise[t].get(b, j);
                let raw = o.get(b, ACT_DIM + j);
                let ls = clamp_log_std(raw);
                let one_m = one - a * a;
                let g_a = din1[t].get(b, OBS_DIM + j) + din2[t].get(b, OBS_DIM + j);
                // d/du of -log(1 - tanh(u)^2 + eps) is 2a(1 - a^2)/(1 - a^2 + eps).
                let g_u = g_a * one_m + w * al * T::two() * a * one_m / (one_m + eps);
                d.set(b, j, g_u);
                let inside = raw > T::from_f64_lossy(LOG_STD_MIN) && raw < T::from_f64_lossy(LOG_STD_MAX);
                if inside {
                    d.set(b, ACT_DIM + j, g_u * ls.exp() * n - w * al);
                }
            }
        }
        d_out.push(d);
    }
    let grads = actor.param_grads(&a_fwd.cache, &d_out);
    (loss / nv, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_normal_log_prob_at_zero() {
        let (a, lp) = squash_sample(0.0f64, 0.0, 0.0);
        assert_eq!(a, 0.0);
        assert!((lp - (-0.918939 - 1e-6)).abs() < 1e-6);
        assert!((lp + 0.9189395332).abs() < 1e-9);
    }

    #[test]
    fn log_std_is_clamped() {
        assert_eq!(clamp_log_std(5.0f64), 2.0);
        assert_eq!(clamp_log_std(-50.0f64), -20.0);
        let (_, lp) = squash_sample(30.0f64, -50.0, 3.0);
        assert!(lp.is_finite());
    }

    #[test]
    fn squashed_density_integrates_to_one() {
        let n = 200_000;
        let h = 2.0 / n as f64;
        let total: f64 = (0..n)
            .map(|i| squashed_density(-1.0 + (i as f64 + 0.5) * h, 0.3, -0.2) * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}
