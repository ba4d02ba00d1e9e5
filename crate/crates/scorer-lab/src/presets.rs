//! Named hyperparameter presets: the tabled full-scale configurations, plus
//! desk-scale variants that shrink env count and horizon while preserving
//! every schedule ratio (k_train=4, k_leader=8, k_target=1e3).

use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::objectives::LeaderObjectiveSpec;
use crate::trainer::{ControlVariant, Regime, TrainConfig};

#[derive(Debug, thiserror::Error)]
#[error("unknown preset: {requested} (available: {available})")]
pub struct UnknownPreset {
    pub requested: String,
    pub available: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    /// Full-scale tabled configuration, as opposed to a desk-scale shrink.
    pub is_paper: bool,
    pub total_timesteps: u64,
    pub learning_starts: u64,
    pub k_train: u64,
    pub k_leader: u64,
    pub k_target: u64,
    pub tau: f64,
    pub gamma: f64,
    pub lr_follower: f64,
    pub lr_leader: f64,
    pub linear_lr_decay: bool,
    pub eps_start: f64,
    pub eps_finish: f64,
    pub eps_anneal_steps: u64,
    pub batch_size: usize,
    pub buffer_size: usize,
    pub num_envs: usize,
    pub latent_dim: usize,
    pub q_hidden_dim: usize,
    pub value_hidden_dim: usize,
    pub advantage_hidden_dim: usize,
    pub lambda_rn: f64,
    pub c_norm: f64,
    pub log_every: u64,
}

pub const PRESET_NAMES: [&str; 4] = [
    "paper-minatar",
    "paper-control",
    "desk-minatar",
    "desk-control",
];

fn paper_minatar() -> Preset {
    Preset {
        name: "paper-minatar".into(),
        is_paper: true,
        total_timesteps: 100_000_000,
        learning_starts: 10_000,
        k_train: 4,
        k_leader: 8,
        k_target: 1_000,
        tau: 1.0,
        gamma: 0.99,
        lr_follower: 1e-4,
        lr_leader: 1e-4,
        linear_lr_decay: true,
        eps_start: 1.0,
        eps_finish: 0.01,
        eps_anneal_steps: 250_000,
        batch_size: 64,
        buffer_size: 100_000,
        num_envs: 128,
        latent_dim: 128,
        q_hidden_dim: 128,
        value_hidden_dim: 64,
        advantage_hidden_dim: 64,
        lambda_rn: 0.1,
        c_norm: 1.0,
        log_every: 1_000,
    }
}

fn paper_control() -> Preset {
    Preset {
        name: "paper-control".into(),
        // Architecture dims follow the control columns; training values
        // reuse the general defaults.
        latent_dim: 64,
        q_hidden_dim: 64,
        value_hidden_dim: 32,
        advantage_hidden_dim: 32,
        is_paper: true,
        ..paper_minatar()
    }
}

fn desk_minatar() -> Preset {
    Preset {
        name: "desk-minatar".into(),
        is_paper: false,
        total_timesteps: 2_000_000,
        num_envs: 8,
        ..paper_minatar()
    }
}

fn desk_control() -> Preset {
    Preset {
        name: "desk-control".into(),
        is_paper: false,
        total_timesteps: 200_000,
        num_envs: 8,
        log_every: 500,
        ..paper_control()
    }
}

pub fn resolve(name: &str) -> Result<Preset, UnknownPreset> {
    match name {
        "paper-minatar" => Ok(paper_minatar()),
        "paper-control" => Ok(paper_control()),
        "desk-minatar" => Ok(desk_minatar()),
        "desk-control" => Ok(desk_control()),
        other => Err(UnknownPreset {
            requested: other.to_string(),
            available: PRESET_NAMES.join(", "),
        }),
    }
}

impl Preset {
    /// Resolves a complete TrainConfig. The leader objective defaults to
    /// MSBE; swap in `var_rn_objective` for the Var+RN leader.
    pub fn config(
        &self,
        env: EnvKind,
        regime: Regime,
        control_variant: ControlVariant,
        seed: u64,
    ) -> TrainConfig {
        TrainConfig {
            env,
            regime,
            control_variant,
            leader_objective: LeaderObjectiveSpec::msbe(),
            seed,
            total_timesteps: self.total_timesteps,
            learning_starts: self.learning_starts,
            k_train: self.k_train,
            k_leader: self.k_leader,
            k_target: self.k_target,
            tau: self.tau,
            gamma: self.gamma,
            lr_follower: self.lr_follower,
            lr_leader: self.lr_leader,
            linear_lr_decay: self.linear_lr_decay,
            eps_start: self.eps_start,
            eps_finish: self.eps_finish,
            eps_anneal_steps: self.eps_anneal_steps,
            batch_size: self.batch_size,
            buffer_size: self.buffer_size,
            num_envs: self.num_envs,
            latent_dim: self.latent_dim,
            q_hidden_dim: self.q_hidden_dim,
            value_hidden_dim: self.value_hidden_dim,
            advantage_hidden_dim: self.advantage_hidden_dim,
            log_every: self.log_every,
            checkpoint_every: None,
        }
    }

    pub fn var_rn_objective(&self) -> LeaderObjectiveSpec {
        LeaderObjectiveSpec::var_rn(self.lambda_rn, self.c_norm)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("preset serializes")
    }
}

/// FNV-1a over bytes; freezes the paper presets against silent drift.
pub fn fnv1a_bytes(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}
