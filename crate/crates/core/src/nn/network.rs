//! Recurrent (or feed-forward) trunk, one ReLU layer, linear head.
//!
//! Layout, with `H = hidden_dim`:
//!
//! ```text
//! x_t ─▶ LSTM(in→H) or Dense(in→H)+ReLU ─▶ Dense(H→H)+ReLU ─▶ Dense(H→out) [+tanh]
//! ```
//!
//! The LSTM gate blocks are ordered `[input, forget, candidate, output]`
//! along the `4H` axis of `lstm.w_x`, `lstm.w_h` and `lstm.b`.

use super::matrix::{gemm_acc, gemm_at_b_acc, transpose, Matrix};
use super::params::{Grads, ParamArray, ParamSet};
use crate::scalar::Scalar;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkRole {
    /// Three tanh outputs.
    ActorDeterministic,
    /// Three means followed by three log-stds.
    ActorStochastic,
    /// Scalar value of a state-action pair.
    Critic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub role: NetworkRole,
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// 1 for an LSTM trunk, 0 for a dense trunk.
    pub lstm_layers: usize,
    pub output_dim: usize,
    pub output: OutputActivation,
}

impl NetworkSpec {
    pub fn actor_deterministic(obs_dim: usize, act_dim: usize, hidden_dim: usize) -> Self {
        NetworkSpec {
            role: NetworkRole::ActorDeterministic,
            input_dim: obs_dim,
            hidden_dim,
            lstm_layers: 1,
            output_dim: act_dim,
            output: OutputActivation::Tanh,
        }
    }

    pub fn actor_stochastic(obs_dim: usize, act_dim: usize, hidden_dim: usize) -> Self {
        NetworkSpec {
            role: NetworkRole::ActorStochastic,
            input_dim: obs_dim,
            hidden_dim,
            lstm_layers: 1,
            output_dim: 2 * act_dim,
            output: OutputActivation::Identity,
        }
    }

    pub fn critic(obs_dim: usize, act_dim: usize, hidden_dim: usize, recurrent: bool) -> Self {
        NetworkSpec {
            role: NetworkRole::Critic,
            input_dim: obs_dim + act_dim,
            hidden_dim,
            lstm_layers: usize::from(recurrent),
            output_dim: 1,
            output: OutputActivation::Identity,
        }
    }

    pub fn recurrent(&self) -> bool {
        self.lstm_layers > 0
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return Err("network dimensions must be positive".into());
        }
        if self.lstm_layers > 1 {
            return Err("at most one LSTM layer is supported".into());
        }
        Ok(())
    }

    /// Names and shapes of the parameter arrays, in storage order.
    pub fn layout(&self) -> Vec<(String, Vec<usize>)> {
        let (i, h, o) = (self.input_dim, self.hidden_dim, self.output_dim);
        let mut v = Vec::new();
        if self.recurrent() {
            v.push(("lstm.w_x".to_string(), vec![i, 4 * h]));
            v.push(("lstm.w_h".to_string(), vec![h, 4 * h]));
            v.push(("lstm.b".to_string(), vec![4 * h]));
        } else {
            v.push(("fc0.w".to_string(), vec![i, h]));
            v.push(("fc0.b".to_string(), vec![h]));
        }
        v.push(("fc1.w".to_string(), vec![h, h]));
        v.push(("fc1.b".to_string(), vec![h]));
        v.push(("head.w".to_string(), vec![h, o]));
        v.push(("head.b".to_string(), vec![o]));
        v
    }
}

/// Hidden and cell state for a batch of sequences (`B x H` each).
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Matrix<T>,
    pub c: Matrix<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(batch: usize, hidden: usize) -> Self {
        LstmState {
            h: Matrix::zeros(batch, hidden),
            c: Matrix::zeros(batch, hidden),
        }
    }
}

#[derive(Debug, Clone)]
struct StepCache<T> {
    x: Matrix<T>,
    h_prev: Matrix<T>,
    c_prev: Matrix<T>,
    /// Post-activation gates `[i, f, g, o]`, `B x 4H`.
    gates: Matrix<T>,
    tanh_c: Matrix<T>,
    trunk: Matrix<T>,
    hidden: Matrix<T>,
    y: Matrix<T>,
}

/// Activations retained by [`Network::forward_seq`] for the backward pass.
#[derive(Debug, Clone)]
pub struct SeqCache<T> {
    steps: Vec<StepCache<T>>,
}

impl<T> SeqCache<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SeqOutput<T> {
    pub outputs: Vec<Matrix<T>>,
    pub state: LstmState<T>,
    pub cache: SeqCache<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub spec: NetworkSpec,
    pub params: ParamSet<T>,
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

fn add_bias<T: Scalar>(m: &mut Matrix<T>, b: &[T]) {
    for r in 0..m.rows {
        for (v, &bb) in m.row_mut(r).iter_mut().zip(b) {
            *v += bb;
        }
    }
}

fn col_sum_acc<T: Scalar>(m: &Matrix<T>, out: &mut [T]) {
    for r in 0..m.rows {
        for (o, &v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
}

impl<T: Scalar> Network<T> {
    /// Glorot-uniform weights, zero biases, forget-gate bias 1. Deterministic per seed.
    pub fn init(spec: NetworkSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = spec.hidden_dim;
        let arrays = spec
            .layout()
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let value = if shape.len() == 2 {
                    let limit = (6.0 / (shape[0] + shape[1]) as f64).sqrt();
                    (0..n)
                        .map(|_| T::from_f64_lossy(rng.random_range(-limit..limit)))
                        .collect()
                } else if name == "lstm.b" {
                    (0..n)
                        .map(|k| if (h..2 * h).contains(&k) { T::one() } else { T::zero() })
                        .collect()
                } else {
                    vec![T::zero(); n]
                };
                ParamArray::new(name, shape, value)
            })
            .collect();
        Network {
            spec,
            params: ParamSet::new(arrays),
        }
    }

    /// All parameters zero.
    pub fn zeros(spec: NetworkSpec) -> Self {
        let arrays = spec
            .layout()
            .into_iter()
            .map(|(name, shape)| {
                let n = shape.iter().product();
                ParamArray::new(name, shape, vec![T::zero(); n])
            })
            .collect();
        Network {
            spec,
            params: ParamSet::new(arrays),
        }
    }

    fn idx(&self) -> LayerIdx {
        if self.spec.recurrent() {
            LayerIdx {
                trunk_w: 0,
                trunk_wh: 1,
                trunk_b: 2,
                fc1_w: 3,
                fc1_b: 4,
                head_w: 5,
                head_b: 6,
            }
        } else {
            LayerIdx {
                trunk_w: 0,
                trunk_wh: usize::MAX,
                trunk_b: 1,
                fc1_w: 2,
                fc1_b: 3,
                head_w: 4,
                head_b: 5,
            }
        }
    }

    fn value(&self, i: usize) -> &[T] {
        &self.params.arrays[i].value
    }

    pub fn zero_state(&self, batch: usize) -> LstmState<T> {
        let h = if self.spec.recurrent() { self.spec.hidden_dim } else { 0 };
        LstmState::zeros(batch, h)
    }

    fn forward_step(&self, x: &Matrix<T>, state: &LstmState<T>) -> (StepCache<T>, Option<LstmState<T>>) {
        let spec = &self.spec;
        let (b, h) = (x.rows, spec.hidden_dim);
        assert_eq!(x.cols, spec.input_dim, "network input width");
        let ix = self.idx();
        let (gates, tanh_c, trunk, c_new) = if spec.recurrent() {
            assert_eq!(state.h.rows, b, "hidden state batch size");
            let mut pre = Matrix::zeros(b, 4 * h);
            gemm_acc(&x.data, self.value(ix.trunk_w), &mut pre.data, b, spec.input_dim, 4 * h);
            gemm_acc(&state.h.data, self.value(ix.trunk_wh), &mut pre.data, b, h, 4 * h);
            add_bias(&mut pre, self.value(ix.trunk_b));
            let mut c = Matrix::zeros(b, h);
            let mut tc = Matrix::zeros(b, h);
            let mut hn = Matrix::zeros(b, h);
            for r in 0..b {
                let g = pre.row_mut(r);
                for k in 0..h {
                    g[k] = sigmoid(g[k]);
                    g[h + k] = sigmoid(g[h + k]);
                    g[2 * h + k] = g[2 * h + k].tanh();
                    g[3 * h + k] = sigmoid(g[3 * h + k]);
                }
                let cp = state.c.row(r);
                let g = pre.row(r);
                for k in 0..h {
                    let cv = g[h + k] * cp[k] + g[k] * g[2 * h + k];
                    let t = cv.tanh();
                    c.data[r * h + k] = cv;
                    tc.data[r * h + k] = t;
                    hn.data[r * h + k] = g[3 * h + k] * t;
                }
            }
            (pre, tc, hn, c)
        } else {
            let mut z = Matrix::zeros(b, h);
            gemm_acc(&x.data, self.value(ix.trunk_w), &mut z.data, b, spec.input_dim, h);
            add_bias(&mut z, self.value(ix.trunk_b));
            let z = z.map(|v| v.max(T::zero()));
            (Matrix::zeros(b, 0), Matrix::zeros(b, 0), z, Matrix::zeros(b, 0))
        };

        let mut hid = Matrix::zeros(b, h);
        gemm_acc(&trunk.data, self.value(ix.fc1_w), &mut hid.data, b, h, h);
        add_bias(&mut hid, self.value(ix.fc1_b));
        let hid = hid.map(|v| v.max(T::zero()));

        let o = spec.output_dim;
        let mut y = Matrix::zeros(b, o);
        gemm_acc(&hid.data, self.value(ix.head_w), &mut y.data, b, h, o);
        add_bias(&mut y, self.value(ix.head_b));
        if spec.output == OutputActivation::Tanh {
            y = y.map(|v| v.tanh());
        }

        let (h_prev, c_prev, next) = if spec.recurrent() {
            let next = LstmState {
                h: trunk.clone(),
                c: c_new,
            };
            (state.h.clone(), state.c.clone(), Some(next))
        } else {
            (Matrix::zeros(b, 0), Matrix::zeros(b, 0), None)
        };
        let cache = StepCache {
            x: x.clone(),
            h_prev,
            c_prev,
            gates,
            tanh_c,
            trunk,
            hidden: hid,
            y,
        };
        (cache, next)
    }

    /// Runs a batch of sequences. `inputs[t]` is `B x input_dim`; `h0`
    /// defaults to zeros.
    pub fn forward_seq(&self, inputs: &[Matrix<T>], h0: Option<&LstmState<T>>) -> SeqOutput<T> {
        let b = inputs.first().map(|m| m.rows).unwrap_or(0);
        let mut state = h0.cloned().unwrap_or_else(|| self.zero_state(b));
        let mut steps = Vec::with_capacity(inputs.len());
        let mut outputs = Vec::with_capacity(inputs.len());
        for x in inputs {
            let (cache, next) = self.forward_step(x, &state);
            if let Some(next) = next {
                state = next;
            }
            outputs.push(cache.y.clone());
            steps.push(cache);
        }
        SeqOutput {
            outputs,
            state,
            cache: SeqCache { steps },
        }
    }

    /// Outputs only, without keeping activations.
    pub fn predict_seq(&self, inputs: &[Matrix<T>], h0: Option<&LstmState<T>>) -> Vec<Matrix<T>> {
        self.forward_seq(inputs, h0).outputs
    }

    /// Single-sample step for online acting; advances `state` in place.
    pub fn step(&self, x: &[T], state: &mut LstmState<T>) -> Vec<T> {
        let xm = Matrix::from_vec(1, x.len(), x.to_vec());
        let (cache, next) = self.forward_step(&xm, state);
        if let Some(next) = next {
            *state = next;
        }
        cache.y.data
    }

    /// Reverse-mode gradients through time. `d_outputs[t]` is the loss
    /// gradient with respect to the (post-activation) output at step `t`.
    /// Returns parameter gradients and per-step input gradients.
    pub fn backward_seq(&self, cache: &SeqCache<T>, d_outputs: &[Matrix<T>]) -> (Grads<T>, Vec<Matrix<T>>) {
        self.backward_impl(cache, d_outputs, true)
    }

    /// [`Network::backward_seq`] without the input gradients.
    pub fn param_grads(&self, cache: &SeqCache<T>, d_outputs: &[Matrix<T>]) -> Grads<T> {
        self.backward_impl(cache, d_outputs, false).0
    }

    fn backward_impl(
        &self,
        cache: &SeqCache<T>,
        d_outputs: &[Matrix<T>],
        want_inputs: bool,
    ) -> (Grads<T>, Vec<Matrix<T>>) {
        assert_eq!(cache.steps.len(), d_outputs.len(), "one upstream gradient per step");
        let spec = &self.spec;
        let (h, o, inp) = (spec.hidden_dim, spec.output_dim, spec.input_dim);
        let ix = self.idx();
        let gates = if spec.recurrent() { 4 * h } else { h };
        // Transposed weights, shared by all steps.
        let head_wt = transpose(self.value(ix.head_w), h, o);
        let fc1_wt = transpose(self.value(ix.fc1_w), h, h);
        let trunk_wt = if want_inputs {
            transpose(self.value(ix.trunk_w), inp, gates)
        } else {
            Vec::new()
        };
        let trunk_wht = if spec.recurrent() {
            transpose(self.value(ix.trunk_wh), h, gates)
        } else {
            Vec::new()
        };
        let mut grads = self.params.zero_grads();
        let mut d_inputs: Vec<Matrix<T>> = Vec::with_capacity(cache.steps.len());
        let mut d_trunk: Vec<Matrix<T>> = Vec::with_capacity(cache.steps.len());

        // Head and fc1 are per-step.
        for (sc, dy) in cache.steps.iter().zip(d_outputs) {
            let b = sc.y.rows;
            assert_eq!((dy.rows, dy.cols), (b, o), "upstream gradient shape");
            let dpre = if spec.output == OutputActivation::Tanh {
                let mut d = dy.clone();
                for (dv, &yv) in d.data.iter_mut().zip(&sc.y.data) {
                    *dv *= T::one() - yv * yv;
                }
                d
            } else {
                dy.clone()
            };
            gemm_at_b_acc(&sc.hidden.data, &dpre.data, &mut grads.arrays[ix.head_w], b, h, o);
            col_sum_acc(&dpre, &mut grads.arrays[ix.head_b]);
            let mut dhid = Matrix::zeros(b, h);
            gemm_acc(&dpre.data, &head_wt, &mut dhid.data, b, o, h);
            for (dv, &hv) in dhid.data.iter_mut().zip(&sc.hidden.data) {
                if hv <= T::zero() {
                    *dv = T::zero();
                }
            }
            gemm_at_b_acc(&sc.trunk.data, &dhid.data, &mut grads.arrays[ix.fc1_w], b, h, h);
            col_sum_acc(&dhid, &mut grads.arrays[ix.fc1_b]);
            let mut dz = Matrix::zeros(b, h);
            gemm_acc(&dhid.data, &fc1_wt, &mut dz.data, b, h, h);
            d_trunk.push(dz);
        }

        if spec.recurrent() {
            let n = cache.steps.len();
            let b = cache.steps.first().map(|s| s.y.rows).unwrap_or(0);
            let mut dh_next = Matrix::zeros(b, h);
            let mut dc_next: Matrix<T> = Matrix::zeros(b, h);
            let mut rev_inputs = Vec::with_capacity(n);
            for t in (0..n).rev() {
                let sc = &cache.steps[t];
                let mut dgates = Matrix::zeros(b, 4 * h);
                for r in 0..b {
                    let g = sc.gates.row(r);
                    let dg = &mut dgates.data[r * 4 * h..(r + 1) * 4 * h];
                    for k in 0..h {
                        let idx = r * h + k;
                        let (ig, fg, cg, og) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                        let tc = sc.tanh_c.data[idx];
                        let dh = d_trunk[t].data[idx] + dh_next.data[idx];
                        let dc = dc_next.data[idx] + dh * og * (T::one() - tc * tc);
                        let d_o = dh * tc;
                        let d_i = dc * cg;
                        let d_g = dc * ig;
                        let d_f = dc * sc.c_prev.data[idx];
                        dc_next.data[idx] = dc * fg;
                        dg[k] = d_i * ig * (T::one() - ig);
                        dg[h + k] = d_f * fg * (T::one() - fg);
                        dg[2 * h + k] = d_g * (T::one() - cg * cg);
                        dg[3 * h + k] = d_o * og * (T::one() - og);
                    }
                }
                gemm_at_b_acc(&sc.x.data, &dgates.data, &mut grads.arrays[ix.trunk_w], b, inp, 4 * h);
                gemm_at_b_acc(&sc.h_prev.data, &dgates.data, &mut grads.arrays[ix.trunk_wh], b, h, 4 * h);
                col_sum_acc(&dgates, &mut grads.arrays[ix.trunk_b]);
                if want_inputs {
                    let mut dx = Matrix::zeros(b, inp);
                    gemm_acc(&dgates.data, &trunk_wt, &mut dx.data, b, 4 * h, inp);
                    rev_inputs.push(dx);
                }
                let mut dhp = Matrix::zeros(b, h);
                gemm_acc(&dgates.data, &trunk_wht, &mut dhp.data, b, 4 * h, h);
                dh_next = dhp;
            }
            rev_inputs.reverse();
            d_inputs = rev_inputs;
        } else {
            for (sc, dz) in cache.steps.iter().zip(d_trunk) {
                let b = sc.x.rows;
                let mut dpre = dz;
                for (dv, &zv) in dpre.data.iter_mut().zip(&sc.trunk.data) {
                    if zv <= T::zero() {
                        *dv = T::zero();
                    }
                }
                gemm_at_b_acc(&sc.x.data, &dpre.data, &mut grads.arrays[ix.trunk_w], b, inp, h);
                col_sum_acc(&dpre, &mut grads.arrays[ix.trunk_b]);
                if want_inputs {
                    let mut dx = Matrix::zeros(b, inp);
                    gemm_acc(&dpre.data, &trunk_wt, &mut dx.data, b, h, inp);
                    d_inputs.push(dx);
                }
            }
        }
        (grads, d_inputs)
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            spec: self.spec,
            params: self.params.cast(),
        }
    }
}

struct LayerIdx {
    trunk_w: usize,
    trunk_wh: usize,
    trunk_b: usize,
    fc1_w: usize,
    fc1_b: usize,
    head_w: usize,
    head_b: usize,
}
