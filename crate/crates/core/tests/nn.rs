mod common;

use common::scalar_forward;
use docrl::nn::{
    grad_check, load_network, save_network, AdamConfig, Matrix, Network, NetworkSpec, ParamArray, ParamSet,
};
use docrl::sim::{ACT_DIM, OBS_DIM};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn specs(hidden: usize) -> Vec<NetworkSpec> {
    vec![
        NetworkSpec::actor_deterministic(OBS_DIM, ACT_DIM, hidden),
        NetworkSpec::actor_stochastic(OBS_DIM, ACT_DIM, hidden),
        NetworkSpec::critic(OBS_DIM, ACT_DIM, hidden, true),
        NetworkSpec::critic(OBS_DIM, ACT_DIM, hidden, false),
    ]
}

fn random_inputs(batch: usize, len: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Matrix<f64>> {
    (0..len)
        .map(|_| Matrix::from_fn(batch, dim, |_, _| rng.random_range(-1.0..1.0)))
        .collect()
}

#[test]
fn batched_forward_matches_per_sample_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for (k, spec) in specs(9).into_iter().enumerate() {
        let net = Network::<f64>::init(spec, k as u64);
        let xs = random_inputs(5, 7, spec.input_dim, &mut rng);
        let got = net.predict_seq(&xs, None);
        for b in 0..5 {
            let seq: Vec<Vec<f64>> = xs.iter().map(|m| m.row(b).to_vec()).collect();
            let want = scalar_forward(&net, &seq);
            for t in 0..7 {
                for (g, w) in got[t].row(b).iter().zip(&want[t]) {
                    assert!((g - w).abs() < 1e-12, "{spec:?} t={t} b={b}: {g} vs {w}");
                }
            }
        }
    }
}

#[test]
fn online_stepping_matches_sequence_forward() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for spec in specs(8) {
        let net = Network::<f64>::init(spec, 3);
        let xs = random_inputs(1, 6, spec.input_dim, &mut rng);
        let seq = net.predict_seq(&xs, None);
        let mut state = net.zero_state(1);
        for (x, y) in xs.iter().zip(&seq) {
            assert_eq!(net.step(&x.data, &mut state), y.data);
        }
    }
}

#[test]
fn init_is_deterministic_per_seed() {
    for spec in specs(16) {
        assert_eq!(Network::<f64>::init(spec, 42), Network::<f64>::init(spec, 42));
        assert_ne!(Network::<f64>::init(spec, 42), Network::<f64>::init(spec, 43));
    }
}

#[test]
fn lstm_state_stays_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let spec = NetworkSpec::actor_deterministic(OBS_DIM, ACT_DIM, 16);
    let net = Network::<f64>::init(spec, 0);
    let xs: Vec<Matrix<f64>> = (0..30)
        .map(|_| Matrix::from_fn(4, OBS_DIM, |_, _| rng.random_range(-50.0..50.0)))
        .collect();
    let out = net.forward_seq(&xs, None);
    assert!(out.state.h.data.iter().all(|v| v.abs() < 1.0));
    // |c_t| grows by at most one per step.
    assert!(out.state.c.data.iter().all(|v| v.abs() <= 30.0));
    for y in &out.outputs {
        assert!(y.data.iter().all(|v| v.abs() <= 1.0));
    }
}

/// Linear probe loss `sum_t sum_b w . y` so the upstream gradient is `w`.
/// Parameters are jittered first: zero initial biases put dead-trunk samples
/// exactly on a ReLU kink, where central differences see half the slope.
#[test]
fn backward_matches_finite_differences_for_every_role() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for (k, spec) in specs(6).into_iter().enumerate() {
        let mut net = Network::<f64>::init(spec, 100 + k as u64);
        for a in &mut net.params.arrays {
            a.value.iter_mut().for_each(|v| *v += rng.random_range(-0.1..0.1));
        }
        for len in [1, 4, 8] {
            let xs = random_inputs(2, len, spec.input_dim, &mut rng);
            let probe = random_inputs(2, len, spec.output_dim, &mut rng);
            let loss = |p: &ParamSet<f64>| {
                let n = Network { spec, params: p.clone() };
                n.predict_seq(&xs, None)
                    .iter()
                    .zip(&probe)
                    .map(|(y, w)| y.data.iter().zip(&w.data).map(|(a, b)| a * b).sum::<f64>())
                    .sum::<f64>()
            };
            let out = net.forward_seq(&xs, None);
            let (g, dx) = net.backward_seq(&out.cache, &probe);
            assert_eq!(dx.len(), len);
            assert_eq!(net.param_grads(&out.cache, &probe), g);
            let r = grad_check(&net.params, &g, loss, 1e-5, 400, k as u64);
            assert!(r.max_rel_error <= 1e-4, "{:?} len {len}: {r:?}", spec.role);
        }
    }
}

#[test]
fn input_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let spec = NetworkSpec::critic(OBS_DIM, ACT_DIM, 7, true);
    let net = Network::<f64>::init(spec, 5);
    let xs = random_inputs(1, 5, spec.input_dim, &mut rng);
    let probe = random_inputs(1, 5, 1, &mut rng);
    let out = net.forward_seq(&xs, None);
    let (_, dx) = net.backward_seq(&out.cache, &probe);
    let f = |xs: &[Matrix<f64>]| -> f64 {
        net.predict_seq(xs, None).iter().zip(&probe).map(|(y, w)| y.data[0] * w.data[0]).sum()
    };
    for t in 0..5 {
        for j in [0, 13, 25, 28] {
            let mut p = xs.clone();
            let mut m = xs.clone();
            p[t].data[j] += 1e-6;
            m[t].data[j] -= 1e-6;
            let fd = (f(&p) - f(&m)) / 2e-6;
            assert!((fd - dx[t].data[j]).abs() < 1e-7, "t={t} j={j}: {fd} vs {}", dx[t].data[j]);
        }
    }
}

fn adam_cfg() -> AdamConfig {
    AdamConfig {
        lr: 3e-4,
        ..Default::default()
    }
}

#[test]
fn first_adam_step_has_learning_rate_magnitude() {
    let mut p = ParamSet::new(vec![ParamArray::new("w", vec![4], vec![0.0f64, 1.0, -2.0, 3.0])]);
    let g = docrl::nn::Grads {
        arrays: vec![vec![1.0, -0.5, 1e-3, 0.0]],
    };
    p.adam_step(&g, &adam_cfg());
    let v = &p.arrays[0].value;
    assert!((v[0] + 3e-4).abs() < 1e-9);
    assert!((v[1] - (1.0 + 3e-4)).abs() < 1e-9);
    assert!((v[2] - (-2.0 - 3e-4)).abs() < 1e-8);
    assert_eq!(v[3], 3.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Adam acts coordinate-wise, so permuting parameters and gradients
    /// together permutes the result.
    #[test]
    fn adam_commutes_with_permutation(
        vals in prop::collection::vec(-3.0f64..3.0, 2..40),
        seed in any::<u64>(),
        steps in 1usize..6,
    ) {
        let n = vals.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let mut a = ParamSet::new(vec![ParamArray::new("w", vec![n], vals.clone())]);
        let mut b = ParamSet::new(vec![ParamArray::new("w", vec![n], perm.iter().map(|&i| vals[i]).collect())]);
        for _ in 0..steps {
            let g: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            a.adam_step(&docrl::nn::Grads { arrays: vec![g.clone()] }, &adam_cfg());
            b.adam_step(&docrl::nn::Grads { arrays: vec![perm.iter().map(|&i| g[i]).collect()] }, &adam_cfg());
        }
        for (k, &i) in perm.iter().enumerate() {
            prop_assert_eq!(b.arrays[0].value[k].to_bits(), a.arrays[0].value[i].to_bits());
        }
    }
}

#[test]
fn checkpoint_roundtrip_is_exact_in_single_precision() {
    let dir = tempfile::tempdir().unwrap();
    for (k, spec) in specs(10).into_iter().enumerate() {
        let stem = format!("net{k}");
        let net = Network::<f32>::init(spec, k as u64);
        save_network(&net, dir.path(), &stem).unwrap();
        let back: Network<f32> = load_network(dir.path(), &stem).unwrap();
        assert_eq!(back.spec, net.spec);
        for (a, b) in net.params.arrays.iter().zip(&back.params.arrays) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.value, b.value);
        }
        // Widening to f64 on load preserves every value.
        let wide: Network<f64> = load_network(dir.path(), &stem).unwrap();
        for (a, b) in net.params.arrays.iter().zip(&wide.params.arrays) {
            assert!(a.value.iter().zip(&b.value).all(|(&x, &y)| f64::from(x) == y));
        }
        let bin = dir.path().join(format!("{stem}.bin"));
        let first = std::fs::read(&bin).unwrap();
        save_network(&back, dir.path(), &stem).unwrap();
        assert_eq!(std::fs::read(&bin).unwrap(), first);
    }
}

#[test]
fn corrupted_checkpoint_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let net = Network::<f64>::init(specs(4)[0], 1);
    save_network(&net, dir.path(), "a").unwrap();
    let bin = dir.path().join("a.bin");
    let mut bytes = std::fs::read(&bin).unwrap();
    bytes.truncate(bytes.len() - 4);
    std::fs::write(&bin, bytes).unwrap();
    assert!(load_network::<f64>(dir.path(), "a").is_err());
}
