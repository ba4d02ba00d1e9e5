//! Perception (leader) and Q (follower) networks.
//!
//! The perception stack applies its activation on the final layer; Q heads
//! leave the output affine. Dueling heads combine value and advantage
//! streams with mean-subtracted advantages.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::RealMatrix;
use crate::mlp::{
    backprop, init_mlp, mlp_forward, Activation, ForwardCache, GradSet, MlpError, ParamSet,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QVariant {
    Plain,
    Dueling,
}

/// Leader network f_phi. One hidden-free layer for control environments,
/// two layers for MinAtar inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionNet {
    pub params: ParamSet,
    pub latent_dim: usize,
}

impl PerceptionNet {
    pub fn new<R: Rng>(
        state_dim: usize,
        latent_dim: usize,
        depth: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(depth == 1 || depth == 2, "perception depth is 1 or 2");
        let params = match depth {
            1 => init_mlp(&[state_dim, latent_dim], &["p_l0"], activation, rng),
            _ => init_mlp(
                &[state_dim, latent_dim, latent_dim],
                &["p_l0", "p_l1"],
                activation,
                rng,
            ),
        };
        Self { params, latent_dim }
    }

    /// Batched encode; the activation is applied on the output layer.
    pub fn encode_batch(&self, states: &RealMatrix) -> Result<ForwardCache, MlpError> {
        mlp_forward(&self.params, states, true)
    }

    pub fn encode(&self, state: &[f64]) -> Result<Vec<f64>, MlpError> {
        let input = RealMatrix::from_vec(1, state.len(), state.to_vec());
        Ok(self.encode_batch(&input)?.output().row(0).to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QHead {
    Plain(ParamSet),
    Dueling {
        value: ParamSet,
        advantage: ParamSet,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNet {
    pub head: QHead,
    pub action_dim: usize,
}

/// Forward trace for a Q evaluation, kept for the reverse pass.
#[derive(Debug, Clone)]
pub enum QCache {
    Plain(ForwardCache),
    Dueling {
        value: ForwardCache,
        advantage: ForwardCache,
        q: RealMatrix,
    },
}

impl QCache {
    pub fn q_values(&self) -> &RealMatrix {
        match self {
            QCache::Plain(c) => c.output(),
            QCache::Dueling { q, .. } => q,
        }
    }
}

/// Gradients mirroring a QNet's parameter layout.
#[derive(Debug, Clone)]
pub enum QGrads {
    Plain(GradSet),
    Dueling { value: GradSet, advantage: GradSet },
}

impl QGrads {
    pub fn flatten(&self) -> Vec<f64> {
        match self {
            QGrads::Plain(g) => g.flatten(),
            QGrads::Dueling { value, advantage } => {
                let mut out = value.flatten();
                out.extend(advantage.flatten());
                out
            }
        }
    }
}

impl QNet {
    pub fn new_plain<R: Rng>(
        latent_dim: usize,
        q_hidden_dim: usize,
        action_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Self {
            head: QHead::Plain(init_mlp(
                &[latent_dim, q_hidden_dim, action_dim],
                &["q_l0", "q_l1"],
                activation,
                rng,
            )),
            action_dim,
        }
    }

    pub fn new_dueling<R: Rng>(
        latent_dim: usize,
        value_hidden_dim: usize,
        advantage_hidden_dim: usize,
        action_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Self {
            head: QHead::Dueling {
                value: init_mlp(
                    &[latent_dim, value_hidden_dim, 1],
                    &["v_l0", "v_l1"],
                    activation,
                    rng,
                ),
                advantage: init_mlp(
                    &[latent_dim, advantage_hidden_dim, action_dim],
                    &["a_l0", "a_l1"],
                    activation,
                    rng,
                ),
            },
            action_dim,
        }
    }

    pub fn variant(&self) -> QVariant {
        match self.head {
            QHead::Plain(_) => QVariant::Plain,
            QHead::Dueling { .. } => QVariant::Dueling,
        }
    }

    pub fn latent_dim(&self) -> usize {
        match &self.head {
            QHead::Plain(p) => p.input_dim(),
            QHead::Dueling { value, .. } => value.input_dim(),
        }
    }

    pub fn num_params(&self) -> usize {
        match &self.head {
            QHead::Plain(p) => p.num_params(),
            QHead::Dueling { value, advantage } => value.num_params() + advantage.num_params(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        match &self.head {
            QHead::Plain(p) => p.flatten(),
            QHead::Dueling { value, advantage } => {
                let mut out = value.flatten();
                out.extend(advantage.flatten());
                out
            }
        }
    }

    pub fn assign_flat(&mut self, flat: &[f64]) {
        match &mut self.head {
            QHead::Plain(p) => p.assign_flat(flat),
            QHead::Dueling { value, advantage } => {
                let nv = value.num_params();
                value.assign_flat(&flat[..nv]);
                advantage.assign_flat(&flat[nv..]);
            }
        }
    }

    pub fn forward_batch(&self, z: &RealMatrix) -> Result<QCache, MlpError> {
        match &self.head {
            QHead::Plain(p) => Ok(QCache::Plain(mlp_forward(p, z, false)?)),
            QHead::Dueling { value, advantage } => {
                let v_cache = mlp_forward(value, z, false)?;
                let a_cache = mlp_forward(advantage, z, false)?;
                let n = z.rows();
                let a_dim = self.action_dim;
                let mut q = RealMatrix::zeros(n, a_dim);
                for i in 0..n {
                    let v = v_cache.output().get(i, 0);
                    let a_row = a_cache.output().row(i);
                    let a_mean = a_row.iter().sum::<f64>() / a_dim as f64;
                    for (j, &a) in a_row.iter().enumerate() {
                        q.set(i, j, v + a - a_mean);
                    }
                }
                Ok(QCache::Dueling {
                    value: v_cache,
                    advantage: a_cache,
                    q,
                })
            }
        }
    }

    pub fn q_values(&self, z: &[f64]) -> Result<Vec<f64>, MlpError> {
        let input = RealMatrix::from_vec(1, z.len(), z.to_vec());
        Ok(self.forward_batch(&input)?.q_values().row(0).to_vec())
    }

    /// Reverse pass from dL/dQ down to parameter grads and dL/dz.
    pub fn backprop_batch(
        &self,
        cache: &QCache,
        q_grad: &RealMatrix,
    ) -> Result<(QGrads, RealMatrix), MlpError> {
        match (&self.head, cache) {
            (QHead::Plain(p), QCache::Plain(c)) => {
                let (grads, input_grad) = backprop(p, c, q_grad)?;
                Ok((QGrads::Plain(grads), input_grad))
            }
            (QHead::Dueling { value, advantage }, QCache::Dueling { value: vc, advantage: ac, .. }) => {
                let n = q_grad.rows();
                let a_dim = self.action_dim;
                // q_ij = v_i + a_ij - mean_k a_ik:
                //   dL/dv_i = sum_j dL/dq_ij
                //   dL/da_ij = dL/dq_ij - (1/A) sum_k dL/dq_ik
                let mut v_grad = RealMatrix::zeros(n, 1);
                let mut a_grad = RealMatrix::zeros(n, a_dim);
                for i in 0..n {
                    let row = q_grad.row(i);
                    let total: f64 = row.iter().sum();
                    v_grad.set(i, 0, total);
                    let mean = total / a_dim as f64;
                    for (j, &g) in row.iter().enumerate() {
                        a_grad.set(i, j, g - mean);
                    }
                }
                let (vg, v_in) = backprop(value, vc, &v_grad)?;
                let (ag, a_in) = backprop(advantage, ac, &a_grad)?;
                let mut input_grad = v_in;
                for (x, &y) in input_grad.data_mut().iter_mut().zip(a_in.data()) {
                    *x += y;
                }
                Ok((
                    QGrads::Dueling {
                        value: vg,
                        advantage: ag,
                    },
                    input_grad,
                ))
            }
            _ => Err(MlpError::StaleCache {
                layer: 0,
                detail: "cache variant does not match network head".into(),
            }),
        }
    }

    /// Flattens the head into one layer list for checkpointing.
    pub fn as_single_paramset(&self) -> ParamSet {
        match &self.head {
            QHead::Plain(p) => p.clone(),
            QHead::Dueling { value, advantage } => {
                let mut layers = value.layers.clone();
                layers.extend(advantage.layers.clone());
                ParamSet {
                    layers,
                    activation: value.activation,
                }
            }
        }
    }

    pub fn restore_from_single_paramset(&mut self, merged: &ParamSet) {
        match &mut self.head {
            QHead::Plain(p) => {
                assert_eq!(merged.layers.len(), p.layers.len());
                p.layers = merged.layers.clone();
            }
            QHead::Dueling { value, advantage } => {
                let nv = value.layers.len();
                assert_eq!(merged.layers.len(), nv + advantage.layers.len());
                value.layers = merged.layers[..nv].to_vec();
                advantage.layers = merged.layers[nv..].to_vec();
            }
        }
    }

    pub fn polyak_from(&mut self, online: &QNet, tau: f64) {
        match (&mut self.head, &online.head) {
            (QHead::Plain(t), QHead::Plain(o)) => t.polyak_from(o, tau),
            (
                QHead::Dueling { value, advantage },
                QHead::Dueling {
                    value: ov,
                    advantage: oa,
                },
            ) => {
                value.polyak_from(ov, tau);
                advantage.polyak_from(oa, tau);
            }
            _ => panic!("target/online head variants differ"),
        }
    }
}

/// Target copies of the leader and follower parameters.
#[derive(Debug, Clone)]
pub struct TargetPair {
    pub phi_target: PerceptionNet,
    pub theta_target: QNet,
}

impl TargetPair {
    pub fn new(phi: &PerceptionNet, theta: &QNet) -> Self {
        Self {
            phi_target: phi.clone(),
            theta_target: theta.clone(),
        }
    }

    /// Polyak blend with coefficient tau; tau = 1 is an exact copy.
    pub fn hard_update(&mut self, phi: &PerceptionNet, theta: &QNet, tau: f64) {
        self.phi_target.params.polyak_from(&phi.params, tau);
        self.theta_target.polyak_from(theta, tau);
    }
}

/// End-to-end forward through perception and Q head, exposing the
/// "second hidden layer" tap used when probing baseline agents: the second
/// hidden activation of the combined stack (the perception output itself
/// when the perception is two layers deep).
pub fn baseline_forward(
    phi: &PerceptionNet,
    theta: &QNet,
    states: &RealMatrix,
) -> Result<(RealMatrix, RealMatrix), MlpError> {
    let encode_cache = phi.encode_batch(states)?;
    let q_cache = theta.forward_batch(encode_cache.output())?;
    let mut hiddens: Vec<&RealMatrix> = encode_cache.layer_outputs.iter().collect();
    if let (QHead::Plain(_), QCache::Plain(c)) = (&theta.head, &q_cache) {
        // All but the affine Q output are hidden activations.
        for h in &c.layer_outputs[..c.layer_outputs.len() - 1] {
            hiddens.push(h);
        }
    }
    let tap = if hiddens.len() >= 2 {
        hiddens[1].clone()
    } else {
        hiddens[0].clone()
    };
    Ok((q_cache.q_values().clone(), tap))
}
