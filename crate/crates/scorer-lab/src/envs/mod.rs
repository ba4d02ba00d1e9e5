//! Deterministic, seedable environments behind one stepping interface,
//! plus a vectorized multi-environment wrapper with auto-reset.

pub mod acrobot;
pub mod breakout;
pub mod cartpole;
pub mod mountain_car;
pub mod trig;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use acrobot::Acrobot;
use breakout::Breakout;
use cartpole::CartPole;
use mountain_car::MountainCar;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("unknown environment name: {0}")]
    UnknownName(String),
    #[error("expected {expected} actions, got {got}")]
    ActionCountMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvKind {
    CartPole,
    Acrobot,
    MountainCar,
    Breakout,
}

impl EnvKind {
    pub fn parse(name: &str) -> Result<Self, EnvError> {
        match name.to_ascii_lowercase().as_str() {
            "cartpole" => Ok(Self::CartPole),
            "acrobot" => Ok(Self::Acrobot),
            "mountaincar" => Ok(Self::MountainCar),
            "breakout" => Ok(Self::Breakout),
            other => Err(EnvError::UnknownName(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::CartPole => "cartpole",
            Self::Acrobot => "acrobot",
            Self::MountainCar => "mountaincar",
            Self::Breakout => "breakout",
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self {
            Self::CartPole => cartpole::OBS_DIM,
            Self::Acrobot => acrobot::OBS_DIM,
            Self::MountainCar => mountain_car::OBS_DIM,
            Self::Breakout => breakout::OBS_DIM,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            Self::CartPole => cartpole::ACTION_DIM,
            Self::Acrobot => acrobot::ACTION_DIM,
            Self::MountainCar => mountain_car::ACTION_DIM,
            Self::Breakout => breakout::ACTION_DIM,
        }
    }

    pub fn time_limit(&self) -> Option<usize> {
        match self {
            Self::CartPole => Some(cartpole::TIME_LIMIT),
            Self::Acrobot => Some(acrobot::TIME_LIMIT),
            Self::MountainCar => Some(mountain_car::TIME_LIMIT),
            Self::Breakout => None,
        }
    }

    pub fn is_minatar(&self) -> bool {
        matches!(self, Self::Breakout)
    }
}

#[derive(Debug, Clone)]
enum Physics {
    CartPole(CartPole),
    Acrobot(Acrobot),
    MountainCar(MountainCar),
    Breakout(Breakout),
}

/// Result of one environment step. `observation` is the successor state s'
/// (the terminal one when `done` is set; auto-reset observations are exposed
/// separately by [`VecEnv`]). `episode_return` reports the finished episode's
/// undiscounted return when `done` is set.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub episode_return: Option<f64>,
}

/// One seedable environment instance.
#[derive(Debug, Clone)]
pub struct EnvState {
    kind: EnvKind,
    physics: Physics,
    rng: ChaCha8Rng,
    steps_in_episode: usize,
    return_acc: f64,
}

impl EnvState {
    /// Creates the environment and performs the initial seeded reset.
    pub fn new(kind: EnvKind, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let physics = Self::draw_initial(kind, &mut rng);
        Self {
            kind,
            physics,
            rng,
            steps_in_episode: 0,
            return_acc: 0.0,
        }
    }

    fn draw_initial(kind: EnvKind, rng: &mut ChaCha8Rng) -> Physics {
        match kind {
            EnvKind::CartPole => Physics::CartPole(CartPole::reset(rng)),
            EnvKind::Acrobot => Physics::Acrobot(Acrobot::reset(rng)),
            EnvKind::MountainCar => Physics::MountainCar(MountainCar::reset(rng)),
            EnvKind::Breakout => Physics::Breakout(Breakout::reset(rng)),
        }
    }

    pub fn kind(&self) -> EnvKind {
        self.kind
    }

    /// Reseeds the RNG stream and starts a fresh episode.
    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.reset_continue()
    }

    /// Starts a fresh episode drawing from the current RNG stream.
    pub fn reset_continue(&mut self) -> Vec<f64> {
        self.physics = Self::draw_initial(self.kind, &mut self.rng);
        self.steps_in_episode = 0;
        self.return_acc = 0.0;
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        match &self.physics {
            Physics::CartPole(p) => p.observation(),
            Physics::Acrobot(p) => p.observation(),
            Physics::MountainCar(p) => p.observation(),
            Physics::Breakout(p) => p.observation(),
        }
    }

    pub fn step(&mut self, action: usize) -> StepResult {
        let (reward, terminated) = match &mut self.physics {
            Physics::CartPole(p) => p.step(action),
            Physics::Acrobot(p) => p.step(action),
            Physics::MountainCar(p) => p.step(action),
            Physics::Breakout(p) => p.step(action),
        };
        self.steps_in_episode += 1;
        self.return_acc += reward;
        let truncated = self
            .kind
            .time_limit()
            .is_some_and(|limit| self.steps_in_episode >= limit);
        let done = terminated || truncated;
        StepResult {
            observation: self.observation(),
            reward,
            done,
            episode_return: done.then_some(self.return_acc),
        }
    }
}

/// Splitmix64, used to derive independent per-env seeds from a master seed.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A batch of same-kind environments stepped in lockstep, with auto-reset.
#[derive(Debug, Clone)]
pub struct VecEnv {
    envs: Vec<EnvState>,
    current_obs: Vec<Vec<f64>>,
}

impl VecEnv {
    pub fn new(kind: EnvKind, num_envs: usize, master_seed: u64) -> Self {
        let envs: Vec<EnvState> = (0..num_envs)
            .map(|i| EnvState::new(kind, derive_seed(master_seed, i as u64)))
            .collect();
        let current_obs = envs.iter().map(|e| e.observation()).collect();
        Self { envs, current_obs }
    }

    pub fn num_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn kind(&self) -> EnvKind {
        self.envs[0].kind()
    }

    /// Observations to act on next (post auto-reset for finished episodes).
    pub fn observations(&self) -> &[Vec<f64>] {
        &self.current_obs
    }

    /// Steps every sub-environment; finished episodes auto-reset from their
    /// own RNG streams. The returned results carry the pre-reset successor
    /// observations for replay storage.
    pub fn vec_step(&mut self, actions: &[usize]) -> Result<Vec<StepResult>, EnvError> {
        if actions.len() != self.envs.len() {
            return Err(EnvError::ActionCountMismatch {
                expected: self.envs.len(),
                got: actions.len(),
            });
        }
        let mut results = Vec::with_capacity(self.envs.len());
        for (i, (env, &action)) in self.envs.iter_mut().zip(actions).enumerate() {
            let result = env.step(action);
            self.current_obs[i] = if result.done {
                env.reset_continue()
            } else {
                result.observation.clone()
            };
            results.push(result);
        }
        Ok(results)
    }
}

/// 64-bit FNV-1a over the observation's f64 values serialized little-endian.
pub fn obs_hash(obs: &[f64]) -> u64 {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for v in obs {
        for byte in v.to_le_bytes() {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
        }
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartpole_reset_within_bounds() {
        for seed in 0..50 {
            let env = EnvState::new(EnvKind::CartPole, seed);
            for v in env.observation() {
                assert!((-0.05..=0.05).contains(&v), "out of init bounds: {v}");
            }
        }
    }

    #[test]
    fn same_seed_same_observation() {
        for kind in [
            EnvKind::CartPole,
            EnvKind::Acrobot,
            EnvKind::MountainCar,
            EnvKind::Breakout,
        ] {
            let a = EnvState::new(kind, 42);
            let b = EnvState::new(kind, 42);
            assert_eq!(a.observation(), b.observation());
        }
    }

    #[test]
    fn breakout_reset_grid_layout() {
        for seed in 0..20 {
            let env = EnvState::new(EnvKind::Breakout, seed);
            let obs = env.observation();
            let count = |c: usize| -> usize {
                (0..100)
                    .filter(|i| obs[i * breakout::CHANNELS + c] == 1.0)
                    .count()
            };
            assert_eq!(count(breakout::CH_BALL), 1);
            assert_eq!(count(breakout::CH_PADDLE), 1);
            assert_eq!(count(breakout::CH_BRICK), 30, "three full brick rows");
        }
    }

    #[test]
    fn breakout_observation_invariants_under_random_play() {
        let mut env = EnvState::new(EnvKind::Breakout, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        use rand::Rng;
        for _ in 0..2000 {
            let action = rng.gen_range(0..3);
            let result = env.step(action);
            let obs = &result.observation;
            assert_eq!(obs.len(), 400);
            assert!(obs.iter().all(|&v| v == 0.0 || v == 1.0));
            let count = |c: usize| -> usize {
                (0..100)
                    .filter(|i| obs[i * breakout::CHANNELS + c] == 1.0)
                    .count()
            };
            assert!(count(breakout::CH_BALL) <= 1);
            assert_eq!(count(breakout::CH_PADDLE), 1);
            if result.done {
                env.reset_continue();
            }
        }
    }

    #[test]
    fn mountain_car_rewards_are_minus_one() {
        let mut env = EnvState::new(EnvKind::MountainCar, 3);
        for _ in 0..200 {
            let result = env.step(1);
            assert_eq!(result.reward, -1.0);
            if result.done {
                break;
            }
        }
    }

    #[test]
    fn cartpole_rewards_are_plus_one_until_done() {
        let mut env = EnvState::new(EnvKind::CartPole, 3);
        loop {
            let result = env.step(0);
            assert_eq!(result.reward, 1.0);
            if result.done {
                break;
            }
        }
    }

    #[test]
    fn trajectories_are_pure_functions_of_seed_and_actions() {
        for kind in [
            EnvKind::CartPole,
            EnvKind::Acrobot,
            EnvKind::MountainCar,
            EnvKind::Breakout,
        ] {
            let mut a = EnvState::new(kind, 5);
            let mut b = EnvState::new(kind, 5);
            let actions: Vec<usize> = (0..300).map(|i| (i * 7 + 3) % kind.action_dim()).collect();
            for &act in &actions {
                let ra = a.step(act);
                let rb = b.step(act);
                assert_eq!(ra.observation, rb.observation);
                assert_eq!(ra.reward, rb.reward);
                assert_eq!(ra.done, rb.done);
                if ra.done {
                    assert_eq!(a.reset_continue(), b.reset_continue());
                }
            }
        }
    }

    #[test]
    fn random_rollouts_stay_finite() {
        use rand::Rng;
        for kind in [
            EnvKind::CartPole,
            EnvKind::Acrobot,
            EnvKind::MountainCar,
            EnvKind::Breakout,
        ] {
            let mut env = EnvState::new(kind, 11);
            let mut rng = ChaCha8Rng::seed_from_u64(13);
            for _ in 0..10_000 {
                let action = rng.gen_range(0..kind.action_dim());
                let result = env.step(action);
                assert!(result.reward.is_finite());
                assert!(result.observation.iter().all(|v| v.is_finite()));
                if result.done {
                    env.reset_continue();
                }
            }
        }
    }

    #[test]
    fn single_env_vec_matches_plain_stepping() {
        let mut venv = VecEnv::new(EnvKind::CartPole, 1, 99);
        let mut env = EnvState::new(EnvKind::CartPole, derive_seed(99, 0));
        assert_eq!(venv.observations()[0], env.observation());
        for i in 0..600 {
            let action = i % 2;
            let results = venv.vec_step(&[action]).unwrap();
            let r = env.step(action);
            assert_eq!(results[0].observation, r.observation);
            assert_eq!(results[0].reward, r.reward);
            assert_eq!(results[0].done, r.done);
            if r.done {
                let reset_obs = env.reset_continue();
                assert_eq!(venv.observations()[0], reset_obs);
            }
        }
    }

    #[test]
    fn vec_env_sub_envs_are_independent() {
        let mut venv = VecEnv::new(EnvKind::MountainCar, 2, 7);
        let seeds = [derive_seed(7, 0), derive_seed(7, 1)];
        let mut singles: Vec<EnvState> = seeds
            .iter()
            .map(|&s| EnvState::new(EnvKind::MountainCar, s))
            .collect();
        for _ in 0..250 {
            let results = venv.vec_step(&[0, 2]).unwrap();
            for (i, action) in [0usize, 2].iter().enumerate() {
                let r = singles[i].step(*action);
                assert_eq!(results[i].observation, r.observation);
                if r.done {
                    singles[i].reset_continue();
                }
            }
        }
    }

    #[test]
    fn vec_step_rejects_wrong_action_count() {
        let mut venv = VecEnv::new(EnvKind::CartPole, 2, 1);
        assert!(matches!(
            venv.vec_step(&[0]),
            Err(EnvError::ActionCountMismatch { .. })
        ));
    }

    #[test]
    fn fnv1a_known_vector() {
        // FNV-1a of the 8 zero bytes of 0.0f64.
        let h = obs_hash(&[0.0]);
        let mut expect: u64 = 0xCBF2_9CE4_8422_2325;
        for _ in 0..8 {
            expect ^= 0;
            expect = expect.wrapping_mul(0x0000_0100_0000_01B3);
        }
        assert_eq!(h, expect);
    }
}
