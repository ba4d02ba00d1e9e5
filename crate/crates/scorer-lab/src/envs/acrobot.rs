//! Acrobot-v1 dynamics: two-link underactuated swing-up with RK4 integration
//! ("book" equations), reward -1 per step until the tip clears the bar,
//! 500-step time limit.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use super::trig;

const DT: f64 = 0.2;
const LINK_LENGTH_1: f64 = 1.0;
const LINK_MASS_1: f64 = 1.0;
const LINK_MASS_2: f64 = 1.0;
const LINK_COM_POS_1: f64 = 0.5;
const LINK_COM_POS_2: f64 = 0.5;
const LINK_MOI: f64 = 1.0;
const MAX_VEL_1: f64 = 4.0 * PI;
const MAX_VEL_2: f64 = 9.0 * PI;
const AVAIL_TORQUE: [f64; 3] = [-1.0, 0.0, 1.0];
const G: f64 = 9.8;

pub const TIME_LIMIT: usize = 500;
pub const OBS_DIM: usize = 6;
pub const ACTION_DIM: usize = 3;

#[derive(Debug, Clone)]
pub struct Acrobot {
    /// [theta1, theta2, dtheta1, dtheta2]
    pub state: [f64; 4],
}

fn wrap(x: f64, low: f64, high: f64) -> f64 {
    let diff = high - low;
    let mut x = x;
    while x > high {
        x -= diff;
    }
    while x < low {
        x += diff;
    }
    x
}

/// Equations of motion with the applied torque appended as a constant input.
fn dsdt(s: &[f64; 5]) -> [f64; 5] {
    let (m1, m2) = (LINK_MASS_1, LINK_MASS_2);
    let l1 = LINK_LENGTH_1;
    let (lc1, lc2) = (LINK_COM_POS_1, LINK_COM_POS_2);
    let (i1, i2) = (LINK_MOI, LINK_MOI);
    let [theta1, theta2, dtheta1, dtheta2, a] = *s;
    let d1 = m1 * lc1 * lc1
        + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * trig::cos(theta2))
        + i1
        + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * trig::cos(theta2)) + i2;
    let phi2 = m2 * lc2 * G * trig::cos(theta1 + theta2 - PI / 2.0);
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * trig::sin(theta2)
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * trig::sin(theta2)
        + (m1 * lc1 + m2 * l1) * G * trig::cos(theta1 - PI / 2.0)
        + phi2;
    let ddtheta2 = (a + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * trig::sin(theta2) - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2, 0.0]
}

fn rk4_step(y0: [f64; 5], dt: f64) -> [f64; 5] {
    let add = |y: &[f64; 5], k: &[f64; 5], h: f64| {
        let mut out = [0.0; 5];
        for i in 0..5 {
            out[i] = y[i] + h * k[i];
        }
        out
    };
    let k1 = dsdt(&y0);
    let k2 = dsdt(&add(&y0, &k1, dt / 2.0));
    let k3 = dsdt(&add(&y0, &k2, dt / 2.0));
    let k4 = dsdt(&add(&y0, &k3, dt));
    let mut out = [0.0; 5];
    for i in 0..5 {
        out[i] = y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

impl Acrobot {
    pub fn reset(rng: &mut ChaCha8Rng) -> Self {
        let mut state = [0.0; 4];
        for v in &mut state {
            *v = rng.gen_range(-0.1..0.1);
        }
        Self { state }
    }

    pub fn observation(&self) -> Vec<f64> {
        let [t1, t2, dt1, dt2] = self.state;
        vec![trig::cos(t1), trig::sin(t1), trig::cos(t2), trig::sin(t2), dt1, dt2]
    }

    pub fn step(&mut self, action: usize) -> (f64, bool) {
        assert!(action < ACTION_DIM, "invalid Acrobot action {action}");
        let torque = AVAIL_TORQUE[action];
        let augmented = [
            self.state[0],
            self.state[1],
            self.state[2],
            self.state[3],
            torque,
        ];
        let ns = rk4_step(augmented, DT);
        self.state = [
            wrap(ns[0], -PI, PI),
            wrap(ns[1], -PI, PI),
            ns[2].clamp(-MAX_VEL_1, MAX_VEL_1),
            ns[3].clamp(-MAX_VEL_2, MAX_VEL_2),
        ];
        let terminated = -trig::cos(self.state[0]) - trig::cos(self.state[1] + self.state[0]) > 1.0;
        let reward = if terminated { 0.0 } else { -1.0 };
        (reward, terminated)
    }
}
