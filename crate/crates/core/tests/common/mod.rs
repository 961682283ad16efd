//! Shared helpers: an independent per-sample scalar forward pass and target
//! oracles written without the batched matrix code.
#![allow(dead_code)]

use docrl::agents::SeqBatch;
use docrl::nn::{Matrix, Network};
use docrl::sim::{ACT_DIM, OBS_DIM};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn arr<'a>(net: &'a Network<f64>, name: &str) -> &'a [f64] {
    &net.params.get(name).value
}

/// `y_j = b_j + sum_i x_i w[i][j]` with `w` row-major `in x out`.
fn dense(x: &[f64], w: &[f64], b: &[f64]) -> Vec<f64> {
    let out = b.len();
    (0..out)
        .map(|j| b[j] + x.iter().enumerate().map(|(i, &xi)| xi * w[i * out + j]).sum::<f64>())
        .collect()
}

fn relu(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| x.max(0.0)).collect()
}

fn sigmoid(x: f64) -> f64 {
    0.5 * (1.0 + (0.5 * x).tanh())
}

/// Runs one sequence through `net` from a zero state, one sample at a time.
pub fn scalar_forward(net: &Network<f64>, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let spec = net.spec;
    let h = spec.hidden_dim;
    let mut hs = vec![0.0; h];
    let mut cs = vec![0.0; h];
    let mut outs = Vec::new();
    for x in xs {
        let trunk = if spec.recurrent() {
            let mut inp = x.clone();
            inp.extend_from_slice(&hs);
            let mut w = arr(net, "lstm.w_x").to_vec();
            w.extend_from_slice(arr(net, "lstm.w_h"));
            let pre = dense(&inp, &w, arr(net, "lstm.b"));
            for k in 0..h {
                let i = sigmoid(pre[k]);
                let f = sigmoid(pre[h + k]);
                let g = pre[2 * h + k].tanh();
                let o = sigmoid(pre[3 * h + k]);
                cs[k] = f * cs[k] + i * g;
                hs[k] = o * cs[k].tanh();
            }
            hs.clone()
        } else {
            relu(dense(x, arr(net, "fc0.w"), arr(net, "fc0.b")))
        };
        let hid = relu(dense(&trunk, arr(net, "fc1.w"), arr(net, "fc1.b")));
        let mut y = dense(&hid, arr(net, "head.w"), arr(net, "head.b"));
        if spec.output == docrl::nn::OutputActivation::Tanh {
            y.iter_mut().for_each(|v| *v = v.tanh());
        }
        outs.push(y);
    }
    outs
}

fn column(ms: &[Matrix<f64>], b: usize) -> Vec<Vec<f64>> {
    ms.iter().map(|m| m.row(b).to_vec()).collect()
}

fn q_seq(critic: &Network<f64>, obs: &[Vec<f64>], act: &[Vec<f64>]) -> Vec<f64> {
    let xs: Vec<Vec<f64>> = obs
        .iter()
        .zip(act)
        .map(|(o, a)| o.iter().chain(a).copied().collect())
        .collect();
    scalar_forward(critic, &xs).into_iter().map(|y| y[0]).collect()
}

/// Per-element pieces of a bootstrapped target.
#[derive(Debug, Clone, Copy)]
pub struct TargetParts {
    pub y: f64,
    pub q1: f64,
    pub q2: f64,
    /// Zero for the deterministic agent.
    pub entropy: f64,
}

/// Deterministic-agent targets `[t][b]`.
pub fn td3_target_oracle(
    actor_t: &Network<f64>,
    c1_t: &Network<f64>,
    c2_t: &Network<f64>,
    batch: &SeqBatch<f64>,
    noise: &[Matrix<f64>],
    gamma: f64,
    clip: f64,
) -> Vec<Vec<TargetParts>> {
    let mut out = vec![Vec::new(); batch.seq_len];
    for b in 0..batch.batch {
        let obs = column(&batch.next_obs, b);
        let mu = scalar_forward(actor_t, &obs);
        let act: Vec<Vec<f64>> = (0..batch.seq_len)
            .map(|t| {
                (0..ACT_DIM)
                    .map(|j| {
                        let e = noise[t].get(b, j).clamp(-clip, clip);
                        (mu[t][j] + e).clamp(-1.0, 1.0)
                    })
                    .collect()
            })
            .collect();
        let q1 = q_seq(c1_t, &obs, &act);
        let q2 = q_seq(c2_t, &obs, &act);
        for t in 0..batch.seq_len {
            let cont = gamma * (1.0 - batch.dones[t][b]);
            out[t].push(TargetParts {
                y: batch.rewards[t][b] + cont * q1[t].min(q2[t]),
                q1: q1[t],
                q2: q2[t],
                entropy: 0.0,
            });
        }
    }
    out
}

/// Stochastic-agent targets `[t][b]`, sampling from the current actor.
#[allow(clippy::too_many_arguments)]
pub fn sac_target_oracle(
    actor: &Network<f64>,
    c1_t: &Network<f64>,
    c2_t: &Network<f64>,
    batch: &SeqBatch<f64>,
    noise: &[Matrix<f64>],
    gamma: f64,
    alpha: f64,
) -> Vec<Vec<TargetParts>> {
    let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    let mut out = vec![Vec::new(); batch.seq_len];
    for b in 0..batch.batch {
        let obs = column(&batch.next_obs, b);
        let stats = scalar_forward(actor, &obs);
        let mut act = Vec::new();
        let mut logp = Vec::new();
        for t in 0..batch.seq_len {
            let mut a = Vec::new();
            let mut lp = 0.0;
            for j in 0..ACT_DIM {
                let ls = stats[t][ACT_DIM + j].clamp(-20.0, 2.0);
                let n = noise[t].get(b, j);
                let aj = (stats[t][j] + ls.exp() * n).tanh();
                lp += -0.5 * n * n - ls - half_ln_2pi - (1.0 - aj * aj + 1e-6).ln();
                a.push(aj);
            }
            act.push(a);
            logp.push(lp);
        }
        let q1 = q_seq(c1_t, &obs, &act);
        let q2 = q_seq(c2_t, &obs, &act);
        for t in 0..batch.seq_len {
            let cont = gamma * (1.0 - batch.dones[t][b]);
            out[t].push(TargetParts {
                y: batch.rewards[t][b] + cont * (q1[t].min(q2[t]) - alpha * logp[t]),
                q1: q1[t],
                q2: q2[t],
                entropy: -alpha * logp[t],
            });
        }
    }
    out
}

/// Random batch with rewards from the reward set, random terminal flags and
/// the last row padded after half its length.
pub fn random_batch(batch: usize, seq_len: usize, rng: &mut ChaCha8Rng) -> SeqBatch<f64> {
    let mut sb = SeqBatch::zeros(batch, seq_len);
    for t in 0..seq_len {
        sb.obs[t] = Matrix::from_fn(batch, OBS_DIM, |_, _| rng.random_range(-1.0..1.0));
        sb.next_obs[t] = Matrix::from_fn(batch, OBS_DIM, |_, _| rng.random_range(-1.0..1.0));
        sb.actions[t] = Matrix::from_fn(batch, ACT_DIM, |_, _| rng.random_range(-1.0..1.0));
        for b in 0..batch {
            sb.rewards[t][b] = [100.0, -10.0, 0.0][rng.random_range(0..3)];
            sb.dones[t][b] = if rng.random_bool(0.2) { 1.0 } else { 0.0 };
            let padded = b + 1 == batch && seq_len > 1 && t >= seq_len / 2;
            sb.mask[t][b] = if padded { 0.0 } else { 1.0 };
        }
    }
    sb
}

pub fn normal_noise(batch: usize, seq_len: usize, sigma: f64, rng: &mut ChaCha8Rng) -> Vec<Matrix<f64>> {
    (0..seq_len)
        .map(|_| {
            Matrix::from_fn(batch, ACT_DIM, |_, _| {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            })
        })
        .collect()
}

/// Copy of `batch` whose padded steps hold large finite garbage.
pub fn with_padding_garbage(batch: &SeqBatch<f64>, rng: &mut ChaCha8Rng) -> SeqBatch<f64> {
    let mut g = batch.clone();
    for t in 0..g.seq_len {
        for b in 0..g.batch {
            if g.mask[t][b] != 0.0 {
                continue;
            }
            for j in 0..OBS_DIM {
                g.obs[t].set(b, j, rng.random_range(-1e3..1e3));
                g.next_obs[t].set(b, j, rng.random_range(-1e3..1e3));
            }
            for j in 0..ACT_DIM {
                g.actions[t].set(b, j, rng.random_range(-1e3..1e3));
            }
            g.rewards[t][b] = rng.random_range(-1e3..1e3);
            g.dones[t][b] = rng.random_range(-5.0..5.0);
        }
    }
    g
}

/// Episodes of random lengths `1..=max_len`, with `s[0]` encoding the step.
pub fn filled_buffer(episodes: u64, max_len: u32, capacity: usize, rng: &mut ChaCha8Rng) -> docrl::agents::ReplayBuffer {
    let mut buf = docrl::agents::ReplayBuffer::new(capacity);
    for ep in 0..episodes {
        let len = rng.random_range(1..=max_len);
        for step in 0..len {
            let mut s = [0.0; OBS_DIM];
            s[0] = f64::from(step);
            s[1] = ep as f64;
            buf.store(docrl::agents::Transition {
                s,
                a: [0.0; ACT_DIM],
                r: 0.0,
                s_next: s,
                done: step + 1 == len,
                episode_id: ep,
                step_in_episode: step,
            });
        }
    }
    buf
}

/// Number of sampled runs that leave their episode or skip a step.
pub fn boundary_crossings(buf: &docrl::agents::ReplayBuffer, runs: &[(usize, usize)]) -> usize {
    runs.iter()
        .filter(|&&(start, len)| {
            let first = buf.get(start);
            (1..len).any(|k| {
                let tr = buf.get(start + k);
                tr.episode_id != first.episode_id || tr.step_in_episode != first.step_in_episode + k as u32
            })
        })
        .count()
}
