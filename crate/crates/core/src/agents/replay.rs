//! Episode-segmented experience storage for recurrent training.

use crate::nn::Matrix;
use crate::scalar::Scalar;
use crate::sim::{ACT_DIM, OBS_DIM};
use rand::Rng;
use std::collections::VecDeque;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s: [f64; OBS_DIM],
    /// Normalized action in [-1, 1]^3.
    pub a: [f64; ACT_DIM],
    pub r: f64,
    pub s_next: [f64; OBS_DIM],
    pub done: bool,
    pub episode_id: u64,
    pub step_in_episode: u32,
}

/// A batch of `B` contiguous runs, time-major: index `[t]` then row `b`.
/// Runs shorter than `seq_len` are padded at the tail with `mask = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqBatch<T> {
    pub batch: usize,
    pub seq_len: usize,
    pub obs: Vec<Matrix<T>>,
    pub actions: Vec<Matrix<T>>,
    pub next_obs: Vec<Matrix<T>>,
    pub rewards: Vec<Vec<T>>,
    pub dones: Vec<Vec<T>>,
    pub mask: Vec<Vec<T>>,
}

impl<T: Scalar> SeqBatch<T> {
    pub fn zeros(batch: usize, seq_len: usize) -> Self {
        SeqBatch {
            batch,
            seq_len,
            obs: (0..seq_len).map(|_| Matrix::zeros(batch, OBS_DIM)).collect(),
            actions: (0..seq_len).map(|_| Matrix::zeros(batch, ACT_DIM)).collect(),
            next_obs: (0..seq_len).map(|_| Matrix::zeros(batch, OBS_DIM)).collect(),
            rewards: vec![vec![T::zero(); batch]; seq_len],
            dones: vec![vec![T::zero(); batch]; seq_len],
            mask: vec![vec![T::zero(); batch]; seq_len],
        }
    }

    pub fn n_valid(&self) -> usize {
        self.mask.iter().flatten().filter(|&&m| m > T::zero()).count()
    }

    fn put(&mut self, t: usize, b: usize, tr: &Transition) {
        let conv = |dst: &mut [T], src: &[f64]| {
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = T::from_f64_lossy(v);
            }
        };
        conv(self.obs[t].row_mut(b), &tr.s);
        conv(self.actions[t].row_mut(b), &tr.a);
        conv(self.next_obs[t].row_mut(b), &tr.s_next);
        self.rewards[t][b] = T::from_f64_lossy(tr.r);
        self.dones[t][b] = if tr.done { T::one() } else { T::zero() };
        self.mask[t][b] = T::one();
    }
}

/// Bounded FIFO of transitions; eviction drops whole oldest episodes.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer {
            data: VecDeque::with_capacity(capacity.min(1 << 20) + 1),
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.data[i]
    }

    pub fn episode_ids(&self) -> Vec<u64> {
        let mut ids: Vec<u64> = self.data.iter().map(|t| t.episode_id).collect();
        ids.dedup();
        ids
    }

    pub fn store(&mut self, tr: Transition) {
        self.data.push_back(tr);
        while self.data.len() > self.capacity {
            let oldest = self.data.front().map(|t| t.episode_id).unwrap();
            let newest = self.data.back().map(|t| t.episode_id).unwrap();
            if oldest == newest {
                // A single episode longer than the buffer: trim its head.
                self.data.pop_front();
            } else {
                while self.data.front().is_some_and(|t| t.episode_id == oldest) {
                    self.data.pop_front();
                }
            }
        }
    }

    /// Run of at most `seq_len` transitions starting at `start` and staying
    /// inside its episode. Returns the exclusive end index.
    pub fn run_end(&self, start: usize, seq_len: usize) -> usize {
        let ep = self.data[start].episode_id;
        let mut end = start + 1;
        while end < self.data.len() && end - start < seq_len && self.data[end].episode_id == ep {
            end += 1;
        }
        end
    }

    /// Start indices and lengths of `batch` runs, starts drawn uniformly over stored transitions.
    pub fn sample_runs<R: Rng + ?Sized>(&self, batch: usize, seq_len: usize, rng: &mut R) -> Vec<(usize, usize)> {
        assert!(!self.data.is_empty(), "sampling from an empty replay buffer");
        (0..batch)
            .map(|_| {
                let start = rng.random_range(0..self.data.len());
                (start, self.run_end(start, seq_len) - start)
            })
            .collect()
    }

    pub fn sample_sequences<T: Scalar, R: Rng + ?Sized>(
        &self,
        batch: usize,
        seq_len: usize,
        rng: &mut R,
    ) -> SeqBatch<T> {
        let runs = self.sample_runs(batch, seq_len, rng);
        self.gather(&runs, seq_len)
    }

    pub fn gather<T: Scalar>(&self, runs: &[(usize, usize)], seq_len: usize) -> SeqBatch<T> {
        let mut out = SeqBatch::zeros(runs.len(), seq_len);
        for (b, &(start, len)) in runs.iter().enumerate() {
            for t in 0..len.min(seq_len) {
                out.put(t, b, &self.data[start + t]);
            }
        }
        out
    }
}
