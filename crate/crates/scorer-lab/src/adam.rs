//! Adam with optional linear learning-rate decay to zero over a scheduled
//! number of updates.

use serde::{Deserialize, Serialize};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum AdamError {
    #[error("gradient length {got} does not match optimizer state length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite gradient at coordinate {index} (value {value})")]
    NonFiniteGrad { index: usize, value: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: u64,
    base_lr: f64,
    total_updates: u64,
    linear_decay: bool,
}

impl AdamState {
    pub fn new(num_params: usize, base_lr: f64, total_updates: u64, linear_decay: bool) -> Self {
        Self {
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step: 0,
            base_lr,
            total_updates,
            linear_decay,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Learning rate that the next update will apply.
    pub fn effective_lr(&self) -> f64 {
        if self.linear_decay {
            let frac = 1.0 - self.step as f64 / self.total_updates as f64;
            self.base_lr * frac.max(0.0)
        } else {
            self.base_lr
        }
    }

    /// One Adam update in place over flattened parameters.
    pub fn apply(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), AdamError> {
        if grads.len() != self.first_moment.len() || params.len() != self.first_moment.len() {
            return Err(AdamError::LengthMismatch {
                expected: self.first_moment.len(),
                got: grads.len(),
            });
        }
        if let Some(idx) = grads.iter().position(|v| !v.is_finite()) {
            return Err(AdamError::NonFiniteGrad {
                index: idx,
                value: grads[idx],
            });
        }
        let lr = self.effective_lr();
        let t = (self.step + 1) as f64;
        let bias1 = 1.0 - BETA1.powf(t);
        let bias2 = 1.0 - BETA2.powf(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.first_moment[i] = BETA1 * self.first_moment[i] + (1.0 - BETA1) * g;
            self.second_moment[i] = BETA2 * self.second_moment[i] + (1.0 - BETA2) * g * g;
            let m_hat = self.first_moment[i] / bias1;
            let v_hat = self.second_moment[i] / bias2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
        }
        self.step += 1;
        Ok(())
    }
}
