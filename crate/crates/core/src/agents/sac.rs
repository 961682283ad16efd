use super::losses::{critic_loss, sac_actor_loss, sac_targets_with_noise, squash_sample};
use super::replay::{ReplayBuffer, SeqBatch};
use super::train::{Learner, UpdateStats};
use super::{policy_update_freq, standard_normal_noise, to_scalars, Algorithm, Hyperparams, Policy, PolicyKind};
use crate::nn::{LstmState, Matrix, Network, NetworkSpec};
use crate::scalar::Scalar;
use crate::sim::{ACT_DIM, OBS_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stochastic double-critic agent with a squashed-Gaussian actor and fixed
/// entropy weight.
#[derive(Debug, Clone)]
pub struct AgentSAC<T> {
    pub hp: Hyperparams,
    pub actor: Network<T>,
    pub critic1: Network<T>,
    pub critic2: Network<T>,
    pub critic1_target: Network<T>,
    pub critic2_target: Network<T>,
    pub grad_steps: u64,
    pub actor_updates: u64,
}

impl<T: Scalar> AgentSAC<T> {
    pub fn new(hp: Hyperparams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = hp.hidden_dim;
        let actor = Network::init(NetworkSpec::actor_stochastic(OBS_DIM, ACT_DIM, h), rng.random());
        let cspec = NetworkSpec::critic(OBS_DIM, ACT_DIM, h, hp.recurrent_critic);
        let critic1 = Network::init(cspec, rng.random());
        let critic2 = Network::init(cspec, rng.random());
        AgentSAC {
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            grad_steps: 0,
            actor_updates: 0,
            hp,
        }
    }

    /// `tanh(mean)`, no sampling.
    pub fn act_mean(&self, obs: &[f64; OBS_DIM], state: &mut LstmState<T>) -> [f64; ACT_DIM] {
        let y = self.actor.step(&to_scalars(obs), state);
        std::array::from_fn(|j| y[j].to_f64_lossy().tanh())
    }

    /// Squashed sample for the given standard-normal draws, with its log-probability.
    pub fn act_with_noise(
        &self,
        obs: &[f64; OBS_DIM],
        state: &mut LstmState<T>,
        noise: &[f64; ACT_DIM],
    ) -> ([f64; ACT_DIM], f64) {
        let y = self.actor.step(&to_scalars(obs), state);
        let mut a = [0.0; ACT_DIM];
        let mut lp = 0.0;
        for j in 0..ACT_DIM {
            let (aj, lj) = squash_sample(
                y[j].to_f64_lossy(),
                y[ACT_DIM + j].to_f64_lossy(),
                noise[j],
            );
            a[j] = aj;
            lp += lj;
        }
        (a, lp)
    }

    pub fn act_sample<R: Rng + ?Sized>(
        &self,
        obs: &[f64; OBS_DIM],
        state: &mut LstmState<T>,
        rng: &mut R,
    ) -> ([f64; ACT_DIM], f64) {
        let noise: [f64; ACT_DIM] = std::array::from_fn(|_| rng.sample(StandardNormal));
        self.act_with_noise(obs, state, &noise)
    }

    pub fn targets<R: Rng + ?Sized>(&self, batch: &SeqBatch<T>, rng: &mut R) -> Vec<Vec<T>> {
        let noise = standard_normal_noise(batch.batch, batch.seq_len, rng);
        self.targets_with_noise(batch, &noise)
    }

    pub fn targets_with_noise(&self, batch: &SeqBatch<T>, noise: &[Matrix<T>]) -> Vec<Vec<T>> {
        sac_targets_with_noise(
            &self.actor,
            &self.critic1_target,
            &self.critic2_target,
            batch,
            noise,
            self.hp.gamma,
            self.hp.sac_alpha,
        )
    }

    pub fn update_critics(&mut self, batch: &SeqBatch<T>, targets: &[Vec<T>]) -> (T, T) {
        let adam = self.hp.adam();
        let (l1, g1) = critic_loss(&self.critic1, batch, targets);
        let (l2, g2) = critic_loss(&self.critic2, batch, targets);
        self.critic1.params.adam_step(&g1, &adam);
        self.critic2.params.adam_step(&g2, &adam);
        (l1, l2)
    }

    /// One Adam step on the actor with fresh reparameterization noise, then
    /// soft updates of the critic targets.
    pub fn update_actor<R: Rng + ?Sized>(&mut self, batch: &SeqBatch<T>, rng: &mut R) -> T {
        let noise = standard_normal_noise(batch.batch, batch.seq_len, rng);
        self.update_actor_with_noise(batch, &noise)
    }

    pub fn update_actor_with_noise(&mut self, batch: &SeqBatch<T>, noise: &[Matrix<T>]) -> T {
        let (loss, g) = sac_actor_loss(
            &self.actor,
            &self.critic1,
            &self.critic2,
            batch,
            noise,
            self.hp.sac_alpha,
        );
        self.actor.params.adam_step(&g, &self.hp.adam());
        self.soft_update_targets();
        self.actor_updates += 1;
        loss
    }

    pub fn soft_update_targets(&mut self) {
        let tau = T::from_f64_lossy(self.hp.tau);
        self.critic1_target.params.soft_update_from(&self.critic1.params, tau);
        self.critic2_target.params.soft_update_from(&self.critic2.params, tau);
    }
}

impl<T: Scalar> Learner<T> for AgentSAC<T> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::DocrlS
    }

    fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    fn begin_episode(&mut self) {}

    fn initial_state(&self) -> LstmState<T> {
        self.actor.zero_state(1)
    }

    fn explore_action(
        &mut self,
        obs: &[f64; OBS_DIM],
        state: &mut LstmState<T>,
        rng: &mut ChaCha8Rng,
    ) -> [f64; ACT_DIM] {
        self.act_sample(obs, state, rng).0
    }

    fn update(&mut self, buffer: &ReplayBuffer, t_in_episode: u32, rng: &mut ChaCha8Rng) -> UpdateStats {
        let batch = buffer.sample_sequences(self.hp.batch, self.hp.seq_len, rng);
        let targets = self.targets(&batch, rng);
        let (l1, l2) = self.update_critics(&batch, &targets);
        self.grad_steps += 1;
        let freq = policy_update_freq(t_in_episode.min(self.hp.max_steps), self.hp.max_steps);
        let actor_loss = (t_in_episode % freq == 0).then(|| self.update_actor(&batch, rng).to_f64_lossy());
        UpdateStats {
            critic_losses: (l1.to_f64_lossy(), l2.to_f64_lossy()),
            actor_loss,
        }
    }

    fn networks(&self) -> Vec<(&'static str, &Network<T>)> {
        vec![
            ("actor", &self.actor),
            ("critic1", &self.critic1),
            ("critic2", &self.critic2),
            ("critic1_target", &self.critic1_target),
            ("critic2_target", &self.critic2_target),
        ]
    }

    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Network<T>)> {
        vec![
            ("actor", &mut self.actor),
            ("critic1", &mut self.critic1),
            ("critic2", &mut self.critic2),
            ("critic1_target", &mut self.critic1_target),
            ("critic2_target", &mut self.critic2_target),
        ]
    }

    fn policy(&self) -> Policy<T> {
        Policy {
            kind: PolicyKind::Stochastic,
            actor: self.actor.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Hyperparams {
        Hyperparams {
            hidden_dim: 8,
            ..Default::default()
        }
    }

    fn batch(rows: usize, seq: usize, seed: u64) -> SeqBatch<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = SeqBatch::zeros(rows, seq);
        for t in 0..seq {
            b.obs[t] = Matrix::from_fn(rows, OBS_DIM, |_, _| rng.random_range(-1.0..1.0));
            b.next_obs[t] = Matrix::from_fn(rows, OBS_DIM, |_, _| rng.random_range(-1.0..1.0));
            b.actions[t] = Matrix::from_fn(rows, ACT_DIM, |_, _| rng.random_range(-1.0..1.0));
            b.mask[t] = vec![1.0; rows];
        }
        b
    }

    #[test]
    fn zero_net_mean_action_is_zero() {
        let mut a = AgentSAC::<f64>::new(tiny(), 0);
        a.actor = Network::zeros(a.actor.spec);
        let mut st = a.actor.zero_state(1);
        assert_eq!(a.act_mean(&[0.5; OBS_DIM], &mut st), [0.0; 3]);
        let mut st = a.actor.zero_state(1);
        let (act, lp) = a.act_with_noise(&[0.5; OBS_DIM], &mut st, &[0.0; 3]);
        assert_eq!(act, [0.0; 3]);
        assert!((lp - 3.0 * (-0.918_938_533_2 - (1.0f64 + 1e-6).ln())).abs() < 1e-9);
    }

    #[test]
    fn sampled_log_probs_are_finite() {
        let a = AgentSAC::<f64>::new(tiny(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut st = a.actor.zero_state(1);
        for k in 0..500 {
            let (act, lp) = a.act_sample(&[(k as f64 * 0.7).cos() * 3.0; OBS_DIM], &mut st, &mut rng);
            assert!(lp.is_finite());
            assert!(act.iter().all(|x| (-1.0..=1.0).contains(x)));
        }
    }

    #[test]
    fn large_alpha_raises_entropy() {
        let mut a = AgentSAC::<f64>::new(
            Hyperparams {
                sac_alpha: 1e3,
                lr: 1e-2,
                ..tiny()
            },
            3,
        );
        let b = batch(16, 2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = standard_normal_noise::<f64, _>(16, 2, &mut rng);
        let mean_lp = |a: &AgentSAC<f64>| {
            let s = super::super::losses::sac_sample(&a.actor, &b.obs, &noise);
            s.log_prob.iter().flatten().sum::<f64>()
        };
        let before = mean_lp(&a);
        a.update_actor_with_noise(&b, &noise);
        assert!(mean_lp(&a) < before);
    }

    #[test]
    fn zero_critics_leave_only_entropy_gradient() {
        let a = AgentSAC::<f64>::new(tiny(), 3);
        let zc = Network::zeros(a.critic1.spec);
        let b = batch(4, 3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = standard_normal_noise::<f64, _>(4, 3, &mut rng);
        let (l_full, g_full) = sac_actor_loss(&a.actor, &zc, &zc, &b, &noise, 0.2);
        let (l_unit, mut g_unit) = sac_actor_loss(&a.actor, &zc, &zc, &b, &noise, 1.0);
        assert!((l_full - 0.2 * l_unit).abs() < 1e-12);
        g_unit.scale(0.2);
        for (x, y) in g_full.flat().iter().zip(g_unit.flat()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sac_targets_soft_update_critics_only() {
        let mut a = AgentSAC::<f64>::new(tiny(), 5);
        let b = batch(4, 2, 3);
        let targets = vec![vec![0.5; 4]; 2];
        a.update_critics(&b, &targets);
        let before = a.critic1_target.params.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        a.update_actor(&b, &mut rng);
        assert_ne!(a.critic1_target.params, before);
        assert_eq!(a.actor_updates, 1);
    }
}
