mod common;

use common::*;
use docrl::agents::losses::{critic_loss, sac_actor_loss, td3_actor_loss};
use docrl::agents::{policy_update_freq, AgentSAC, AgentTD3, Hyperparams};
use docrl::nn::Network;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hp(recurrent_critic: bool) -> Hyperparams {
    Hyperparams {
        hidden_dim: 12,
        recurrent_critic,
        ..Default::default()
    }
}

/// Targets differ from the online networks so a mix-up cannot pass.
fn td3_agent(seed: u64, recurrent_critic: bool) -> AgentTD3<f64> {
    let mut a = AgentTD3::<f64>::new(hp(recurrent_critic), seed);
    a.actor_target = Network::init(a.actor.spec, seed + 100);
    a.critic1_target = Network::init(a.critic1.spec, seed + 200);
    a.critic2_target = Network::init(a.critic2.spec, seed + 300);
    a
}

fn sac_agent(seed: u64, recurrent_critic: bool) -> AgentSAC<f64> {
    let mut a = AgentSAC::<f64>::new(hp(recurrent_critic), seed);
    a.critic1_target = Network::init(a.critic1.spec, seed + 200);
    a.critic2_target = Network::init(a.critic2.spec, seed + 300);
    a
}

#[test]
fn td3_targets_match_scalar_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..60 {
        let agent = td3_agent(k, k % 2 == 0);
        let batch = random_batch(3, 1 + (k as usize % 4), &mut rng);
        let noise = normal_noise(3, batch.seq_len, 0.3, &mut rng);
        let got = agent.targets_with_noise(&batch, &noise);
        let h = agent.hp;
        let want = td3_target_oracle(
            &agent.actor_target,
            &agent.critic1_target,
            &agent.critic2_target,
            &batch,
            &noise,
            h.gamma,
            h.target_noise_clip,
        );
        for (gt, wt) in got.iter().zip(&want) {
            for (g, w) in gt.iter().zip(wt) {
                assert!((g - w.y).abs() <= 1e-12, "{g} vs {}", w.y);
            }
        }
    }
}

#[test]
fn sac_targets_match_scalar_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..60 {
        let agent = sac_agent(k, k % 2 == 1);
        let batch = random_batch(3, 1 + (k as usize % 4), &mut rng);
        let noise = normal_noise(3, batch.seq_len, 1.0, &mut rng);
        let got = agent.targets_with_noise(&batch, &noise);
        let want = sac_target_oracle(
            &agent.actor,
            &agent.critic1_target,
            &agent.critic2_target,
            &batch,
            &noise,
            agent.hp.gamma,
            agent.hp.sac_alpha,
        );
        for (gt, wt) in got.iter().zip(&want) {
            for (g, w) in gt.iter().zip(wt) {
                assert!((g - w.y).abs() <= 1e-12, "{g} vs {}", w.y);
            }
        }
    }
}

#[test]
fn td3_soft_update_is_exact_and_touches_all_targets() {
    let mut a = td3_agent(5, true);
    let before = [
        a.actor_target.params.clone(),
        a.critic1_target.params.clone(),
        a.critic2_target.params.clone(),
    ];
    a.soft_update_targets();
    let after = [&a.actor_target.params, &a.critic1_target.params, &a.critic2_target.params];
    let src = [&a.actor.params, &a.critic1.params, &a.critic2.params];
    for ((b, t), s) in before.iter().zip(after).zip(src) {
        for ((ba, ta), sa) in b.arrays.iter().zip(&t.arrays).zip(&s.arrays) {
            for ((&d, &n), &x) in ba.value.iter().zip(&ta.value).zip(&sa.value) {
                assert_eq!(n.to_bits(), (0.005 * x + (1.0 - 0.005) * d).to_bits());
            }
        }
    }
}

#[test]
fn sac_soft_update_leaves_actor_alone() {
    let mut a = sac_agent(6, true);
    let actor = a.actor.params.clone();
    let c1 = a.critic1_target.params.clone();
    a.soft_update_targets();
    assert_eq!(a.actor.params, actor);
    for ((ba, ta), sa) in c1.arrays.iter().zip(&a.critic1_target.params.arrays).zip(&a.critic1.params.arrays) {
        for ((&d, &n), &x) in ba.value.iter().zip(&ta.value).zip(&sa.value) {
            assert_eq!(n.to_bits(), (0.005 * x + (1.0 - 0.005) * d).to_bits());
        }
    }
}

#[test]
fn sampled_runs_never_cross_episodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let buf = filled_buffer(300, 40, 5_000, &mut rng);
    assert!(buf.episode_ids().len() > 100);
    let runs = buf.sample_runs(10_000, 8, &mut rng);
    assert_eq!(boundary_crossings(&buf, &runs), 0);
    // Short runs only occur at episode ends.
    for &(start, len) in &runs {
        if len < 8 {
            let last = buf.get(start + len - 1);
            assert!(last.done || start + len == buf.len(), "run stops mid-episode");
        }
    }
}

fn flat_bits(g: &docrl::nn::Grads<f64>) -> Vec<u64> {
    g.flat().iter().map(|v| v.to_bits()).collect()
}

#[test]
fn padded_steps_do_not_reach_any_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for recurrent in [true, false] {
        let td3 = td3_agent(7, recurrent);
        let sac = sac_agent(8, recurrent);
        let clean = random_batch(4, 6, &mut rng);
        let dirty = with_padding_garbage(&clean, &mut rng);
        assert_ne!(clean, dirty);
        let noise = normal_noise(4, 6, 1.0, &mut rng);

        let t_clean = td3.targets_with_noise(&clean, &noise);
        let t_dirty = td3.targets_with_noise(&dirty, &noise);
        let (l1, g1) = critic_loss(&td3.critic1, &clean, &t_clean);
        let (l2, g2) = critic_loss(&td3.critic1, &dirty, &t_dirty);
        assert_eq!(l1.to_bits(), l2.to_bits());
        assert_eq!(flat_bits(&g1), flat_bits(&g2));

        let (l1, g1) = td3_actor_loss(&td3.actor, &td3.critic1, &clean);
        let (l2, g2) = td3_actor_loss(&td3.actor, &td3.critic1, &dirty);
        assert_eq!(l1.to_bits(), l2.to_bits());
        assert_eq!(flat_bits(&g1), flat_bits(&g2));

        let (l1, g1) = sac_actor_loss(&sac.actor, &sac.critic1, &sac.critic2, &clean, &noise, 0.2);
        let (l2, g2) = sac_actor_loss(&sac.actor, &sac.critic1, &sac.critic2, &dirty, &noise, 0.2);
        assert_eq!(l1.to_bits(), l2.to_bits());
        assert_eq!(flat_bits(&g1), flat_bits(&g2));
    }
}

#[test]
fn policy_delay_schedule() {
    assert_eq!(
        [0, 250, 500].map(|t| policy_update_freq(t, 500)),
        [2, 3, 6]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn policy_delay_grows_from_two_to_six(m in 1u32..2000, frac in 0.0f64..=1.0) {
        let t = ((f64::from(m) * frac) as u32).min(m);
        let f = policy_update_freq(t, m);
        prop_assert!((2..=6).contains(&f));
        if t < m {
            prop_assert!(policy_update_freq(t + 1, m) >= f);
        }
    }

    #[test]
    fn smoothed_target_actions_stay_in_range(seed in 0u64..1000, sigma in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = td3_agent(seed, false);
        let batch = random_batch(3, 3, &mut rng);
        let noise = normal_noise(3, 3, sigma, &mut rng);
        let acts = docrl::agents::losses::td3_next_actions(&agent.actor_target, &batch.next_obs, &noise, 0.125);
        for a in &acts {
            prop_assert!(a.data.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn min_critic_dominance(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = sac_agent(seed, rng.random());
        let batch = random_batch(2, 3, &mut rng);
        let noise = normal_noise(2, 3, 1.0, &mut rng);
        let got = agent.targets_with_noise(&batch, &noise);
        let parts = sac_target_oracle(
            &agent.actor, &agent.critic1_target, &agent.critic2_target, &batch, &noise, 0.99, 0.2,
        );
        for t in 0..3 {
            for b in 0..2 {
                let p = parts[t][b];
                let cont = 0.99 * (1.0 - batch.dones[t][b]);
                let r = batch.rewards[t][b];
                prop_assert!(got[t][b] <= r + cont * (p.q1 + p.entropy) + 1e-9);
                prop_assert!(got[t][b] <= r + cont * (p.q2 + p.entropy) + 1e-9);
            }
        }
    }
}
