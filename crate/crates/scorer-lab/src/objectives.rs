//! Bellman targets and the follower/leader losses with their gradients.
//!
//! The follower minimizes the mean squared Bellman error with the perception
//! output treated as a constant input. Leader losses are evaluated through a
//! frozen follower parameter snapshot and differentiated into the perception
//! parameters only.

use serde::{Deserialize, Serialize};

use crate::linalg::RealMatrix;
use crate::mlp::{backprop, MlpError};
use crate::nets::{PerceptionNet, QNet};
use crate::replay::Transition;

#[derive(Debug, thiserror::Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error("non-finite loss value: {0}")]
    NonFiniteLoss(f64),
    #[error("batch of {0} is too small for a variance objective (need >= 2)")]
    BatchTooSmall(usize),
}

/// Parallel arrays for one sampled minibatch.
#[derive(Debug, Clone)]
pub struct Minibatch {
    pub states: RealMatrix,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub next_states: RealMatrix,
    pub dones: Vec<f64>,
}

impl Minibatch {
    pub fn from_transitions(transitions: &[&Transition]) -> Self {
        let states = RealMatrix::from_rows(
            &transitions.iter().map(|t| t.state.clone()).collect::<Vec<_>>(),
        );
        let next_states = RealMatrix::from_rows(
            &transitions
                .iter()
                .map(|t| t.next_state.clone())
                .collect::<Vec<_>>(),
        );
        Self {
            states,
            actions: transitions.iter().map(|t| t.action).collect(),
            rewards: transitions.iter().map(|t| t.reward).collect(),
            next_states,
            dones: transitions
                .iter()
                .map(|t| if t.done { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct BellmanTargets {
    pub y: Vec<f64>,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LeaderObjectiveKind {
    Msbe,
    VarRn,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LeaderObjectiveSpec {
    pub kind: LeaderObjectiveKind,
    pub lambda_rn: f64,
    pub c_norm: f64,
}

impl LeaderObjectiveSpec {
    pub fn msbe() -> Self {
        Self {
            kind: LeaderObjectiveKind::Msbe,
            lambda_rn: 0.0,
            c_norm: 0.0,
        }
    }

    pub fn var_rn(lambda_rn: f64, c_norm: f64) -> Self {
        assert!(lambda_rn >= 0.0);
        Self {
            kind: LeaderObjectiveKind::VarRn,
            lambda_rn,
            c_norm,
        }
    }
}

/// Which parameter set a gradient addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradTarget {
    Phi,
    Theta,
}

/// Scalar loss paired with flattened parameter-shaped gradients.
#[derive(Debug, Clone)]
pub struct LossGrad {
    pub loss: f64,
    pub grads: Vec<f64>,
    pub wrt: GradTarget,
}

/// Bootstrapped targets y_j = r_j + gamma (1 - d_j) * V(s'_j), where V is
/// the target-network maximum (DQN) or the target-network value of the
/// online argmax action (double DQN). No gradients flow through targets.
pub fn bellman_targets(
    batch: &Minibatch,
    phi_target: &PerceptionNet,
    theta_target: &QNet,
    theta_online: &QNet,
    gamma: f64,
    double_q: bool,
) -> Result<BellmanTargets, ObjectiveError> {
    let z_next = phi_target.encode_batch(&batch.next_states)?;
    let q_target = theta_target.forward_batch(z_next.output())?;
    let n = batch.len();
    let mut y = Vec::with_capacity(n);
    if double_q {
        let q_online = theta_online.forward_batch(z_next.output())?;
        for j in 0..n {
            let online_row = q_online.q_values().row(j);
            let best = argmax_first(online_row);
            let v = q_target.q_values().get(j, best);
            y.push(batch.rewards[j] + gamma * (1.0 - batch.dones[j]) * v);
        }
    } else {
        for j in 0..n {
            let row = q_target.q_values().row(j);
            let v = row[argmax_first(row)];
            y.push(batch.rewards[j] + gamma * (1.0 - batch.dones[j]) * v);
        }
    }
    Ok(BellmanTargets { y, gamma })
}

/// Lowest index wins ties, matching the action-selection rule.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Per-sample Bellman residuals and the dL/dQ matrix for a mean-squared
/// reduction (zero except at each sample's taken action).
fn msbe_residuals(
    q: &RealMatrix,
    batch: &Minibatch,
    y: &[f64],
) -> (f64, Vec<f64>, RealMatrix) {
    let n = batch.len();
    let mut loss = 0.0;
    let mut deltas = Vec::with_capacity(n);
    let mut q_grad = RealMatrix::zeros(n, q.cols());
    for j in 0..n {
        let delta = y[j] - q.get(j, batch.actions[j]);
        loss += delta * delta;
        deltas.push(delta);
        // d/dq of (y - q)^2 / N
        q_grad.set(j, batch.actions[j], -2.0 * delta / n as f64);
    }
    (loss / n as f64, deltas, q_grad)
}

/// Follower MSBE with the perception output detached: gradients address
/// theta only.
pub fn follower_loss_grad(
    batch: &Minibatch,
    targets: &BellmanTargets,
    phi: &PerceptionNet,
    theta: &QNet,
) -> Result<LossGrad, ObjectiveError> {
    let z = phi.encode_batch(&batch.states)?;
    let q_cache = theta.forward_batch(z.output())?;
    let (loss, _, q_grad) = msbe_residuals(q_cache.q_values(), batch, &targets.y);
    if !loss.is_finite() {
        return Err(ObjectiveError::NonFiniteLoss(loss));
    }
    let (grads, _) = theta.backprop_batch(&q_cache, &q_grad)?;
    Ok(LossGrad {
        loss,
        grads: grads.flatten(),
        wrt: GradTarget::Theta,
    })
}

/// Leader MSBE: same scalar as the follower loss but evaluated through the
/// frozen snapshot theta_bu, with the gradient chained through the Q input
/// back into phi.
pub fn leader_msbe_loss_grad(
    batch: &Minibatch,
    targets: &BellmanTargets,
    phi: &PerceptionNet,
    theta_bu: &QNet,
) -> Result<LossGrad, ObjectiveError> {
    let z_cache = phi.encode_batch(&batch.states)?;
    let q_cache = theta_bu.forward_batch(z_cache.output())?;
    let (loss, _, q_grad) = msbe_residuals(q_cache.q_values(), batch, &targets.y);
    if !loss.is_finite() {
        return Err(ObjectiveError::NonFiniteLoss(loss));
    }
    let (_, z_grad) = theta_bu.backprop_batch(&q_cache, &q_grad)?;
    let (phi_grads, _) = backprop(&phi.params, &z_cache, &z_grad)?;
    Ok(LossGrad {
        loss,
        grads: phi_grads.flatten(),
        wrt: GradTarget::Phi,
    })
}

/// Leader variance objective: population variance of the Bellman residuals
/// plus the representation-normalization penalty
/// lambda * (C - mean_j ||z_j||^2)^2. Gradients address phi only.
pub fn leader_var_rn_loss_grad(
    batch: &Minibatch,
    targets: &BellmanTargets,
    phi: &PerceptionNet,
    theta_bu: &QNet,
    spec: &LeaderObjectiveSpec,
) -> Result<LossGrad, ObjectiveError> {
    let n = batch.len();
    if n < 2 {
        return Err(ObjectiveError::BatchTooSmall(n));
    }
    debug_assert_eq!(spec.kind, LeaderObjectiveKind::VarRn);
    let z_cache = phi.encode_batch(&batch.states)?;
    let z = z_cache.output();
    let q_cache = theta_bu.forward_batch(z)?;
    let q = q_cache.q_values();

    let deltas: Vec<f64> = (0..n)
        .map(|j| targets.y[j] - q.get(j, batch.actions[j]))
        .collect();
    let mean_delta = deltas.iter().sum::<f64>() / n as f64;
    let mean_sq = deltas.iter().map(|d| d * d).sum::<f64>() / n as f64;
    let variance = mean_sq - mean_delta * mean_delta;

    let mean_norm_sq = (0..n)
        .map(|j| z.row(j).iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / n as f64;
    let gap = spec.c_norm - mean_norm_sq;
    let loss = variance + spec.lambda_rn * gap * gap;
    if !loss.is_finite() {
        return Err(ObjectiveError::NonFiniteLoss(loss));
    }

    // dVar/ddelta_j = (2/N)(delta_j - mean_delta), ddelta_j/dq_j = -1.
    let mut q_grad = RealMatrix::zeros(n, q.cols());
    for j in 0..n {
        q_grad.set(
            j,
            batch.actions[j],
            -2.0 / n as f64 * (deltas[j] - mean_delta),
        );
    }
    let (_, mut z_grad) = theta_bu.backprop_batch(&q_cache, &q_grad)?;
    // Penalty: d/dz_j of lambda (C - m)^2 with m the batch-mean squared norm
    // is -(4 lambda / N)(C - m) z_j.
    let penalty_coeff = -4.0 * spec.lambda_rn * gap / n as f64;
    for (g, &v) in z_grad.data_mut().iter_mut().zip(z.data()) {
        *g += penalty_coeff * v;
    }
    let (phi_grads, _) = backprop(&phi.params, &z_cache, &z_grad)?;
    Ok(LossGrad {
        loss,
        grads: phi_grads.flatten(),
        wrt: GradTarget::Phi,
    })
}

/// End-to-end MSBE for the baseline regime: one scalar, gradients into both
/// parameter sets (no detachment anywhere).
pub fn end_to_end_msbe_loss_grad(
    batch: &Minibatch,
    targets: &BellmanTargets,
    phi: &PerceptionNet,
    theta: &QNet,
) -> Result<(f64, Vec<f64>, Vec<f64>), ObjectiveError> {
    let z_cache = phi.encode_batch(&batch.states)?;
    let q_cache = theta.forward_batch(z_cache.output())?;
    let (loss, _, q_grad) = msbe_residuals(q_cache.q_values(), batch, &targets.y);
    if !loss.is_finite() {
        return Err(ObjectiveError::NonFiniteLoss(loss));
    }
    let (theta_grads, z_grad) = theta.backprop_batch(&q_cache, &q_grad)?;
    let (phi_grads, _) = backprop(&phi.params, &z_cache, &z_grad)?;
    Ok((loss, phi_grads.flatten(), theta_grads.flatten()))
}
