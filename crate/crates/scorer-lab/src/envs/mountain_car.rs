//! MountainCar-v0 dynamics: underpowered car on a sinusoidal hill,
//! reward -1 per step, 200-step time limit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

const MIN_POSITION: f64 = -1.2;
const MAX_POSITION: f64 = 0.6;
const MAX_SPEED: f64 = 0.07;
const GOAL_POSITION: f64 = 0.5;
const GOAL_VELOCITY: f64 = 0.0;
const FORCE: f64 = 0.001;
const GRAVITY: f64 = 0.0025;

pub const TIME_LIMIT: usize = 200;
pub const OBS_DIM: usize = 2;
pub const ACTION_DIM: usize = 3;

#[derive(Debug, Clone)]
pub struct MountainCar {
    /// [position, velocity]
    pub state: [f64; 2],
}

impl MountainCar {
    pub fn reset(rng: &mut ChaCha8Rng) -> Self {
        Self {
            state: [rng.gen_range(-0.6..-0.4), 0.0],
        }
    }

    pub fn observation(&self) -> Vec<f64> {
        self.state.to_vec()
    }

    pub fn step(&mut self, action: usize) -> (f64, bool) {
        assert!(action < ACTION_DIM, "invalid MountainCar action {action}");
        let [mut position, mut velocity] = self.state;
        velocity += (action as f64 - 1.0) * FORCE + super::trig::cos(3.0 * position) * (-GRAVITY);
        velocity = velocity.clamp(-MAX_SPEED, MAX_SPEED);
        position += velocity;
        position = position.clamp(MIN_POSITION, MAX_POSITION);
        if position == MIN_POSITION && velocity < 0.0 {
            velocity = 0.0;
        }
        self.state = [position, velocity];
        let terminated = position >= GOAL_POSITION && velocity >= GOAL_VELOCITY;
        (-1.0, terminated)
    }
}
