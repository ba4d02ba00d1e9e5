//! CartPole-v1 dynamics: Euler-integrated cart-pole balancing, reward +1 per
//! step, 500-step time limit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const LENGTH: f64 = 0.5; // half pole length
const POLE_MASS_LENGTH: f64 = MASS_POLE * LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
const X_THRESHOLD: f64 = 2.4;

pub const TIME_LIMIT: usize = 500;
pub const OBS_DIM: usize = 4;
pub const ACTION_DIM: usize = 2;

#[derive(Debug, Clone)]
pub struct CartPole {
    /// [x, x_dot, theta, theta_dot]
    pub state: [f64; 4],
}

impl CartPole {
    pub fn reset(rng: &mut ChaCha8Rng) -> Self {
        let mut state = [0.0; 4];
        for v in &mut state {
            *v = rng.gen_range(-0.05..0.05);
        }
        Self { state }
    }

    pub fn observation(&self) -> Vec<f64> {
        self.state.to_vec()
    }

    /// Returns (reward, terminated). Truncation is handled by the caller's
    /// step counter.
    pub fn step(&mut self, action: usize) -> (f64, bool) {
        assert!(action < ACTION_DIM, "invalid CartPole action {action}");
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
        let (sin_t, cos_t) = super::trig::sin_cos(theta);
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin_t) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_t - cos_t * temp)
            / (LENGTH * (4.0 / 3.0 - MASS_POLE * cos_t * cos_t / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS;
        // Semi-explicit Euler, matching the reference integrator.
        let x = x + TAU * x_dot;
        let x_dot = x_dot + TAU * x_acc;
        let theta = theta + TAU * theta_dot;
        let theta_dot = theta_dot + TAU * theta_acc;
        self.state = [x, x_dot, theta, theta_dot];
        let terminated =
            x < -X_THRESHOLD || x > X_THRESHOLD || theta < -THETA_THRESHOLD || theta > THETA_THRESHOLD;
        (1.0, terminated)
    }
}
