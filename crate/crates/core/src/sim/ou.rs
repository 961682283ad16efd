//! Ornstein-Uhlenbeck process, used for wind gusts and for exploration noise.

use crate::scalar::Scalar;
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OuParams {
    pub theta: f64,
    pub sigma: f64,
    pub mu: f64,
}

/// Multi-channel OU process with the Euler-Maruyama update
/// `x' = x + theta (mu - x) dt + sigma sqrt(dt) n`.
#[derive(Debug, Clone)]
pub struct OuProcess<T> {
    pub state: Vec<T>,
    pub theta: T,
    pub sigma: T,
    pub mu: T,
    pub dt: T,
}

impl<T: Scalar> OuProcess<T> {
    pub fn new(channels: usize, params: OuParams, dt: f64) -> Self {
        let mu = T::from_f64_lossy(params.mu);
        OuProcess {
            state: vec![mu; channels],
            theta: T::from_f64_lossy(params.theta),
            sigma: T::from_f64_lossy(params.sigma),
            mu,
            dt: T::from_f64_lossy(dt),
        }
    }

    pub fn reset(&mut self) {
        let mu = self.mu;
        self.state.iter_mut().for_each(|x| *x = mu);
    }

    /// Advances every channel with the given standard-normal draws.
    pub fn advance(&mut self, draws: &[T]) -> &[T] {
        assert_eq!(draws.len(), self.state.len(), "one draw per channel");
        let diffusion = self.sigma * self.dt.sqrt();
        for (x, &n) in self.state.iter_mut().zip(draws) {
            *x = *x + self.theta * (self.mu - *x) * self.dt + diffusion * n;
        }
        &self.state
    }

    /// Advances with fresh draws from `rng`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[T] {
        let draws: Vec<T> = (0..self.state.len())
            .map(|_| T::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        self.advance(&draws)
    }

    /// Variance of the discrete recursion at stationarity.
    pub fn stationary_variance(&self) -> T {
        let rho = T::one() - self.theta * self.dt;
        self.sigma * self.sigma * self.dt / (T::one() - rho * rho)
    }
}
