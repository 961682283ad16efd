use super::losses::{critic_loss, td3_actor_loss, td3_targets_with_noise};
use super::replay::{ReplayBuffer, SeqBatch};
use super::train::{Learner, UpdateStats};
use super::{gaussian_noise, policy_update_freq, to_scalars, Algorithm, Hyperparams, Policy, PolicyKind};
use crate::nn::{LstmState, Network, NetworkSpec};
use crate::scalar::Scalar;
use crate::sim::{OuProcess, ACT_DIM, OBS_DIM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic double-critic agent with delayed policy updates.
#[derive(Debug, Clone)]
pub struct AgentTD3<T> {
    pub hp: Hyperparams,
    pub actor: Network<T>,
    pub actor_target: Network<T>,
    pub critic1: Network<T>,
    pub critic2: Network<T>,
    pub critic1_target: Network<T>,
    pub critic2_target: Network<T>,
    /// Exploration noise in normalized action space.
    pub explore: OuProcess<f64>,
    pub grad_steps: u64,
    pub actor_updates: u64,
}

impl<T: Scalar> AgentTD3<T> {
    pub fn new(hp: Hyperparams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = hp.hidden_dim;
        let actor = Network::init(NetworkSpec::actor_deterministic(OBS_DIM, ACT_DIM, h), rng.random());
        let cspec = NetworkSpec::critic(OBS_DIM, ACT_DIM, h, hp.recurrent_critic);
        let critic1 = Network::init(cspec, rng.random());
        let critic2 = Network::init(cspec, rng.random());
        AgentTD3 {
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            explore: OuProcess::new(ACT_DIM, hp.ou_explore, 1.0),
            grad_steps: 0,
            actor_updates: 0,
            hp,
        }
    }

    /// Greedy action: the tanh head.
    pub fn act(&self, obs: &[f64; OBS_DIM], state: &mut LstmState<T>) -> [f64; ACT_DIM] {
        self.act_with_noise(obs, state, &[0.0; ACT_DIM])
    }

    /// Actor output plus the given noise, clamped to `[-1, 1]`.
    pub fn act_with_noise(&self, obs: &[f64; OBS_DIM], state: &mut LstmState<T>, noise: &[f64]) -> [f64; ACT_DIM] {
        let y = self.actor.step(&to_scalars(obs), state);
        std::array::from_fn(|j| (y[j].to_f64_lossy() + noise[j]).clamp(-1.0, 1.0))
    }

    /// Advances the exploration process and adds it to the actor output.
    pub fn act_explore<R: Rng + ?Sized>(
        &mut self,
        obs: &[f64; OBS_DIM],
        state: &mut LstmState<T>,
        rng: &mut R,
    ) -> [f64; ACT_DIM] {
        let noise = self.explore.step(rng).to_vec();
        self.act_with_noise(obs, state, &noise)
    }

    pub fn targets<R: Rng + ?Sized>(&self, batch: &SeqBatch<T>, rng: &mut R) -> Vec<Vec<T>> {
        let noise = gaussian_noise(batch.batch, batch.seq_len, self.hp.target_noise_sigma, rng);
        self.targets_with_noise(batch, &noise)
    }

    pub fn targets_with_noise(&self, batch: &SeqBatch<T>, noise: &[crate::nn::Matrix<T>]) -> Vec<Vec<T>> {
        td3_targets_with_noise(
            &self.actor_target,
            &self.critic1_target,
            &self.critic2_target,
            batch,
            noise,
            self.hp.gamma,
            self.hp.target_noise_clip,
        )
    }

    /// One Adam step on each critic toward fixed targets.
    pub fn update_critics(&mut self, batch: &SeqBatch<T>, targets: &[Vec<T>]) -> (T, T) {
        let adam = self.hp.adam();
        let (l1, g1) = critic_loss(&self.critic1, batch, targets);
        let (l2, g2) = critic_loss(&self.critic2, batch, targets);
        self.critic1.params.adam_step(&g1, &adam);
        self.critic2.params.adam_step(&g2, &adam);
        (l1, l2)
    }

    /// One Adam step on the actor followed by soft updates of all targets.
    pub fn update_actor(&mut self, batch: &SeqBatch<T>) -> T {
        let (loss, g) = td3_actor_loss(&self.actor, &self.critic1, batch);
        self.actor.params.adam_step(&g, &self.hp.adam());
        self.soft_update_targets();
        self.actor_updates += 1;
        loss
    }

    pub fn soft_update_targets(&mut self) {
        let tau = T::from_f64_lossy(self.hp.tau);
        self.actor_target.params.soft_update_from(&self.actor.params, tau);
        self.critic1_target.params.soft_update_from(&self.critic1.params, tau);
        self.critic2_target.params.soft_update_from(&self.critic2.params, tau);
    }
}

impl<T: Scalar> Learner<T> for AgentTD3<T> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::DocrlD
    }

    fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    fn begin_episode(&mut self) {
        self.explore.reset();
    }

    fn initial_state(&self) -> LstmState<T> {
        self.actor.zero_state(1)
    }

    fn explore_action(
        &mut self,
        obs: &[f64; OBS_DIM],
        state: &mut LstmState<T>,
        rng: &mut ChaCha8Rng,
    ) -> [f64; ACT_DIM] {
        self.act_explore(obs, state, rng)
    }

    fn update(&mut self, buffer: &ReplayBuffer, t_in_episode: u32, rng: &mut ChaCha8Rng) -> UpdateStats {
        let batch = buffer.sample_sequences(self.hp.batch, self.hp.seq_len, rng);
        let targets = self.targets(&batch, rng);
        let (l1, l2) = self.update_critics(&batch, &targets);
        self.grad_steps += 1;
        let freq = policy_update_freq(t_in_episode.min(self.hp.max_steps), self.hp.max_steps);
        let actor_loss = (t_in_episode % freq == 0).then(|| self.update_actor(&batch).to_f64_lossy());
        UpdateStats {
            critic_losses: (l1.to_f64_lossy(), l2.to_f64_lossy()),
            actor_loss,
        }
    }

    fn networks(&self) -> Vec<(&'static str, &Network<T>)> {
        vec![
            ("actor", &self.actor),
            ("actor_target", &self.actor_target),
            ("critic1", &self.critic1),
            ("critic2", &self.critic2),
            ("critic1_target", &self.critic1_target),
            ("critic2_target", &self.critic2_target),
        ]
    }

    fn networks_mut(&mut self) -> Vec<(&'static str, &mut Network<T>)> {
        vec![
            ("actor", &mut self.actor),
            ("actor_target", &mut self.actor_target),
            ("critic1", &mut self.critic1),
            ("critic2", &mut self.critic2),
            ("critic1_target", &mut self.critic1_target),
            ("critic2_target", &mut self.critic2_target),
        ]
    }

    fn policy(&self) -> Policy<T> {
        Policy {
            kind: PolicyKind::Deterministic,
            actor: self.actor.clone(),
        }
    }
}
