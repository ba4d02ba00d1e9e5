//! The full two-timescale training loop: epsilon-greedy interaction over
//! vectorized environments, replay, follower/leader Adam updates, target
//! refreshes, and three selectable coupling regimes.
//!
//! `t_env` counts TOTAL transitions across the parallel environments and
//! drives every schedule: epsilon annealing, learning_starts, and the
//! k_train / k_leader / k_target boundaries. A boundary is serviced once
//! when `t_env` crosses it, strictly after `learning_starts`.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adam::{AdamError, AdamState};
use crate::checkpoint::{save_checkpoint, CheckpointError};
use crate::envs::{derive_seed, EnvError, EnvKind, VecEnv};
use crate::linalg::RealMatrix;
use crate::mlp::{Activation, MlpError};
use crate::nets::{PerceptionNet, QNet, TargetPair};
use crate::objectives::{
    argmax_first, bellman_targets, end_to_end_msbe_loss_grad, follower_loss_grad,
    leader_msbe_loss_grad, leader_var_rn_loss_grad, LeaderObjectiveKind, LeaderObjectiveSpec,
    Minibatch, ObjectiveError,
};
use crate::replay::{ReplayBuffer, ReplayError, Transition};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Adam(#[from] AdamError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Baseline,
    TeamCoupling,
    Scorer,
}

impl Regime {
    pub fn parse(name: &str) -> Result<Self, TrainError> {
        match name.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Self::Baseline),
            "team" | "teamcoupling" => Ok(Self::TeamCoupling),
            "scorer" => Ok(Self::Scorer),
            other => Err(TrainError::InvalidConfig(format!(
                "unknown regime: {other} (expected baseline, team, scorer)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::TeamCoupling => "team",
            Self::Scorer => "scorer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlVariant {
    Dqn,
    Ddqn,
    DuelingDqn,
    DuelingDdqn,
}

impl ControlVariant {
    pub fn parse(name: &str) -> Result<Self, TrainError> {
        match name.to_ascii_lowercase().as_str() {
            "dqn" => Ok(Self::Dqn),
            "ddqn" => Ok(Self::Ddqn),
            "dueling-dqn" | "duelingdqn" => Ok(Self::DuelingDqn),
            "dueling-ddqn" | "duelingddqn" => Ok(Self::DuelingDdqn),
            other => Err(TrainError::InvalidConfig(format!(
                "unknown control variant: {other} (expected dqn, ddqn, dueling-dqn, dueling-ddqn)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Dqn => "dqn",
            Self::Ddqn => "ddqn",
            Self::DuelingDqn => "dueling-dqn",
            Self::DuelingDdqn => "dueling-ddqn",
        }
    }

    pub fn double_q(&self) -> bool {
        matches!(self, Self::Ddqn | Self::DuelingDdqn)
    }

    pub fn dueling(&self) -> bool {
        matches!(self, Self::DuelingDqn | Self::DuelingDdqn)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub env: EnvKind,
    pub regime: Regime,
    pub control_variant: ControlVariant,
    pub leader_objective: LeaderObjectiveSpec,
    pub seed: u64,
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
    /// Env-step interval for loss/epsilon/lr records.
    pub log_every: u64,
    /// Env-step interval for checkpoints; the final step always checkpoints.
    pub checkpoint_every: Option<u64>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let positive = [
            ("total_timesteps", self.total_timesteps),
            ("k_train", self.k_train),
            ("k_leader", self.k_leader),
            ("k_target", self.k_target),
            ("log_every", self.log_every),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(TrainError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.k_leader % self.k_train != 0 {
            return Err(TrainError::InvalidConfig(format!(
                "k_leader ({}) must be a multiple of k_train ({})",
                self.k_leader, self.k_train
            )));
        }
        if self.eps_finish > self.eps_start {
            return Err(TrainError::InvalidConfig(
                "eps_finish must not exceed eps_start".into(),
            ));
        }
        if self.batch_size == 0 || self.buffer_size == 0 || self.num_envs == 0 {
            return Err(TrainError::InvalidConfig(
                "batch_size, buffer_size, num_envs must be positive".into(),
            ));
        }
        Ok(())
    }

    fn perception_depth(&self) -> usize {
        if self.env.is_minatar() {
            2
        } else {
            1
        }
    }
}

/// Linear epsilon schedule: eps_start to eps_finish over eps_anneal_steps,
/// then constant.
pub fn epsilon_at(t_env: u64, cfg: &TrainConfig) -> f64 {
    if t_env >= cfg.eps_anneal_steps {
        cfg.eps_finish
    } else {
        let frac = t_env as f64 / cfg.eps_anneal_steps as f64;
        cfg.eps_start + (cfg.eps_finish - cfg.eps_start) * frac
    }
}

/// Epsilon-greedy over a batch of latent rows: per row an independent coin,
/// uniform action with probability epsilon, else the lowest-index argmax.
pub fn select_actions(
    qnet: &QNet,
    z_batch: &RealMatrix,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>, MlpError> {
    let q = qnet.forward_batch(z_batch)?;
    let mut actions = Vec::with_capacity(z_batch.rows());
    for i in 0..z_batch.rows() {
        let a = if rng.gen::<f64>() < epsilon {
            rng.gen_range(0..qnet.action_dim)
        } else {
            argmax_first(q.q_values().row(i))
        };
        actions.push(a);
    }
    Ok(actions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Return,
    LossFollower,
    LossLeader,
    Epsilon,
    Lr,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Return => "return",
            Self::LossFollower => "loss_follower",
            Self::LossLeader => "loss_leader",
            Self::Epsilon => "epsilon",
            Self::Lr => "lr",
        }
    }
}

/// Time-indexed scalar records, written out as metrics.csv.
#[derive(Debug, Clone, Default)]
pub struct MetricLog {
    pub records: Vec<(u64, MetricKind, f64)>,
}

impl MetricLog {
    pub fn push(&mut self, t_env: u64, kind: MetricKind, value: f64) {
        self.records.push((t_env, kind, value));
    }

    pub fn series(&self, kind: MetricKind) -> Vec<(u64, f64)> {
        self.records
            .iter()
            .filter(|(_, k, _)| *k == kind)
            .map(|&(t, _, v)| (t, v))
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), std::io::Error> {
        let mut out = String::from("t_env,kind,value\n");
        for (t, kind, v) in &self.records {
            out.push_str(&format!("{t},{},{v}\n", kind.name()));
        }
        let mut f = fs::File::create(path)?;
        f.write_all(out.as_bytes())
    }
}

/// Per-phase diagnostics for tests and logging.
#[derive(Debug, Clone, Copy)]
pub struct UpdateDiag {
    pub follower_loss: f64,
    pub leader_loss: Option<f64>,
    pub target_updated: bool,
}

#[derive(Debug)]
pub struct TrainerState {
    pub cfg: TrainConfig,
    pub venv: VecEnv,
    pub phi: PerceptionNet,
    pub theta: QNet,
    pub targets: TargetPair,
    pub buffer: ReplayBuffer,
    pub adam_follower: AdamState,
    pub adam_leader: AdamState,
    pub rng_action: ChaCha8Rng,
    pub rng_sample: ChaCha8Rng,
    pub t_env: u64,
    pub next_target_at: u64,
    pub follower_updates: u64,
    pub leader_updates: u64,
    pub target_updates: u64,
    pub metrics: MetricLog,
    last_follower_loss: f64,
    last_leader_loss: f64,
}

/// Multiples of `k` in the half-open interval (lo, hi].
pub fn boundaries_crossed(k: u64, lo: u64, hi: u64) -> u64 {
    hi / k - lo / k
}

/// Seeded construction of the perception and Q networks a config describes.
pub fn build_nets(cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> (PerceptionNet, QNet) {
    let phi = PerceptionNet::new(
        cfg.env.obs_dim(),
        cfg.latent_dim,
        cfg.perception_depth(),
        Activation::Relu,
        rng,
    );
    let theta = if cfg.control_variant.dueling() {
        QNet::new_dueling(
            cfg.latent_dim,
            cfg.value_hidden_dim,
            cfg.advantage_hidden_dim,
            cfg.env.action_dim(),
            Activation::Relu,
            rng,
        )
    } else {
        QNet::new_plain(
            cfg.latent_dim,
            cfg.q_hidden_dim,
            cfg.env.action_dim(),
            Activation::Relu,
            rng,
        )
    };
    (phi, theta)
}

impl TrainerState {
    pub fn new(cfg: TrainConfig) -> Result<Self, TrainError> {
        cfg.validate()?;
        let seed = cfg.seed;
        let venv = VecEnv::new(cfg.env, cfg.num_envs, derive_seed(seed, 1));
        let mut rng_init = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));
        let (phi, theta) = build_nets(&cfg, &mut rng_init);
        let targets = TargetPair::new(&phi, &theta);
        // Closed-form expected optimizer step counts drive the lr decay
        // denominator.
        let follower_total =
            boundaries_crossed(cfg.k_train, cfg.learning_starts, cfg.total_timesteps);
        let leader_total = match cfg.regime {
            Regime::Scorer => {
                boundaries_crossed(cfg.k_leader, cfg.learning_starts, cfg.total_timesteps)
            }
            // Team couples leader steps to every update phase.
            _ => follower_total,
        };
        let follower_params = match cfg.regime {
            Regime::Baseline => phi.params.num_params() + theta.num_params(),
            _ => theta.num_params(),
        };
        let adam_follower = AdamState::new(
            follower_params,
            cfg.lr_follower,
            follower_total,
            cfg.linear_lr_decay,
        );
        let adam_leader = AdamState::new(
            phi.params.num_params(),
            cfg.lr_leader,
            leader_total.max(1),
            cfg.linear_lr_decay,
        );
        // First target boundary strictly after learning_starts.
        let next_target_at = (cfg.learning_starts / cfg.k_target + 1) * cfg.k_target;
        Ok(Self {
            venv,
            phi,
            theta,
            targets,
            buffer: ReplayBuffer::new(cfg.buffer_size),
            adam_follower,
            adam_leader,
            rng_action: ChaCha8Rng::seed_from_u64(derive_seed(seed, 3)),
            rng_sample: ChaCha8Rng::seed_from_u64(derive_seed(seed, 4)),
            t_env: 0,
            next_target_at,
            follower_updates: 0,
            leader_updates: 0,
            target_updates: 0,
            metrics: MetricLog::default(),
            last_follower_loss: f64::NAN,
            last_leader_loss: f64::NAN,
            cfg,
        })
    }

    fn leader_grad(
        &self,
        batch: &Minibatch,
        targets: &crate::objectives::BellmanTargets,
        theta_for_leader: &QNet,
    ) -> Result<crate::objectives::LossGrad, ObjectiveError> {
        match self.cfg.leader_objective.kind {
            LeaderObjectiveKind::Msbe => {
                leader_msbe_loss_grad(batch, targets, &self.phi, theta_for_leader)
            }
            LeaderObjectiveKind::VarRn => leader_var_rn_loss_grad(
                batch,
                targets,
                &self.phi,
                theta_for_leader,
                &self.cfg.leader_objective,
            ),
        }
    }

    fn follower_step(
        &mut self,
        batch: &Minibatch,
        targets: &crate::objectives::BellmanTargets,
    ) -> Result<f64, TrainError> {
        let lg = follower_loss_grad(batch, targets, &self.phi, &self.theta)?;
        let mut flat = self.theta.flatten();
        self.adam_follower.apply(&mut flat, &lg.grads)?;
        self.theta.assign_flat(&flat);
        Ok(lg.loss)
    }

    fn leader_step(
        &mut self,
        batch: &Minibatch,
        targets: &crate::objectives::BellmanTargets,
        theta_for_leader: &QNet,
    ) -> Result<f64, TrainError> {
        let lg = self.leader_grad(batch, targets, theta_for_leader)?;
        let mut flat = self.phi.params.flatten();
        self.adam_leader.apply(&mut flat, &lg.grads)?;
        self.phi.params.assign_flat(&flat);
        Ok(lg.loss)
    }

    /// One update phase at env-step boundary `boundary` (a k_train multiple
    /// past learning_starts): sample, snapshot, follower step, conditional
    /// leader step, conditional target refresh.
    pub fn update_phase(&mut self, boundary: u64) -> Result<UpdateDiag, TrainError> {
        debug_assert_eq!(boundary % self.cfg.k_train, 0);
        let sampled = self
            .buffer
            .sample(self.cfg.batch_size, &mut self.rng_sample)?;
        let batch = Minibatch::from_transitions(&sampled);
        let targets = bellman_targets(
            &batch,
            &self.targets.phi_target,
            &self.targets.theta_target,
            &self.theta,
            self.cfg.gamma,
            self.cfg.control_variant.double_q(),
        )?;

        let mut leader_loss = None;
        let follower_loss = match self.cfg.regime {
            Regime::Baseline => {
                let (loss, phi_grads, theta_grads) =
                    end_to_end_msbe_loss_grad(&batch, &targets, &self.phi, &self.theta)?;
                let mut flat = self.phi.params.flatten();
                flat.extend(self.theta.flatten());
                let mut grads = phi_grads;
                grads.extend(theta_grads);
                self.adam_follower.apply(&mut flat, &grads)?;
                let n_phi = self.phi.params.num_params();
                self.phi.params.assign_flat(&flat[..n_phi]);
                self.theta.assign_flat(&flat[n_phi..]);
                loss
            }
            Regime::TeamCoupling => {
                let loss = self.follower_step(&batch, &targets)?;
                // Leader on the follower's timescale, through the CURRENT
                // (post-update) detached theta: no anticipation.
                let theta_now = self.theta.clone();
                leader_loss = Some(self.leader_step(&batch, &targets, &theta_now)?);
                self.leader_updates += 1;
                loss
            }
            Regime::Scorer => {
                // Anticipation: the leader sees the follower parameters as
                // they stood BEFORE this phase's follower step.
                let theta_bu = self.theta.clone();
                let loss = self.follower_step(&batch, &targets)?;
                if boundary % self.cfg.k_leader == 0 {
                    leader_loss = Some(self.leader_step(&batch, &targets, &theta_bu)?);
                    self.leader_updates += 1;
                }
                loss
            }
        };
        self.follower_updates += 1;
        self.last_follower_loss = follower_loss;
        if let Some(l) = leader_loss {
            self.last_leader_loss = l;
        }

        let mut target_updated = false;
        if boundary >= self.next_target_at {
            self.targets
                .hard_update(&self.phi, &self.theta, self.cfg.tau);
            self.target_updates += 1;
            target_updated = true;
            while self.next_target_at <= boundary {
                self.next_target_at += self.cfg.k_target;
            }
        }
        Ok(UpdateDiag {
            follower_loss,
            leader_loss,
            target_updated,
        })
    }

    /// One vectorized interaction step: act, store, advance t_env, and
    /// service every schedule boundary crossed.
    pub fn interaction_step(&mut self) -> Result<(), TrainError> {
        let epsilon = epsilon_at(self.t_env, &self.cfg);
        let obs_rows: Vec<Vec<f64>> = self.venv.observations().to_vec();
        let states = RealMatrix::from_rows(&obs_rows);
        let z = self.phi.encode_batch(&states)?;
        let actions = select_actions(&self.theta, z.output(), epsilon, &mut self.rng_action)?;
        let results = self.venv.vec_step(&actions)?;

        let t0 = self.t_env;
        let t1 = t0 + self.cfg.num_envs as u64;
        for (i, r) in results.into_iter().enumerate() {
            if let Some(ret) = r.episode_return {
                // Interleaved transition numbering keeps return records at
                // distinct, strictly increasing t_env values.
                self.metrics.push(t0 + i as u64 + 1, MetricKind::Return, ret);
            }
            self.buffer.push(Transition {
                state: obs_rows[i].clone(),
                action: actions[i],
                reward: r.reward,
                next_state: r.observation,
                done: r.done,
            });
        }
        self.t_env = t1;

        if t1 > self.cfg.learning_starts && self.buffer.len() >= self.cfg.batch_size {
            let lo = t0.max(self.cfg.learning_starts);
            let first = (lo / self.cfg.k_train + 1) * self.cfg.k_train;
            let mut b = first;
            while b <= t1 {
                self.update_phase(b)?;
                b += self.cfg.k_train;
            }
        }

        if boundaries_crossed(self.cfg.log_every, t0, t1) > 0 {
            self.metrics.push(t1, MetricKind::Epsilon, epsilon);
            self.metrics
                .push(t1, MetricKind::Lr, self.adam_follower.effective_lr());
            if self.last_follower_loss.is_finite() {
                self.metrics
                    .push(t1, MetricKind::LossFollower, self.last_follower_loss);
            }
            if self.last_leader_loss.is_finite() {
                self.metrics
                    .push(t1, MetricKind::LossLeader, self.last_leader_loss);
            }
        }
        Ok(())
    }

    pub fn write_checkpoint(&self, path: &Path) -> Result<(), CheckpointError> {
        let theta_merged = self.theta.as_single_paramset();
        let theta_target_merged = self.targets.theta_target.as_single_paramset();
        save_checkpoint(
            path,
            &[
                ("phi", &self.phi.params),
                ("theta", &theta_merged),
                ("phi_target", &self.targets.phi_target.params),
                ("theta_target", &theta_target_merged),
            ],
        )
    }

    /// Runs the interaction loop to total_timesteps. With an output
    /// directory, periodic and final checkpoints are written; on a fault the
    /// last consistent state is dumped before the error propagates.
    pub fn run(&mut self, out_dir: Option<&Path>) -> Result<(), TrainError> {
        let ckpt_dir = out_dir.map(|d| d.join("checkpoints"));
        if let Some(d) = &ckpt_dir {
            fs::create_dir_all(d)?;
        }
        let mut next_ckpt = self.cfg.checkpoint_every;
        while self.t_env < self.cfg.total_timesteps {
            let t0 = self.t_env;
            if let Err(e) = self.interaction_step() {
                if let Some(d) = &ckpt_dir {
                    let _ = self.write_checkpoint(&d.join(format!("fault_step_{}.bin", self.t_env)));
                }
                return Err(e);
            }
            if let (Some(d), Some(every)) = (&ckpt_dir, &mut next_ckpt) {
                if boundaries_crossed(*every, t0, self.t_env) > 0 && self.t_env < self.cfg.total_timesteps
                {
                    self.write_checkpoint(&d.join(format!("step_{}.bin", self.t_env)))?;
                }
            }
        }
        if let Some(d) = &ckpt_dir {
            self.write_checkpoint(&d.join(format!("step_{}.bin", self.t_env)))?;
        }
        Ok(())
    }
}

/// Creates the run directory, persists the resolved config, trains, and
/// writes metrics.csv (also on faults, for post-mortem).
pub fn train(cfg: &TrainConfig, out_dir: &Path) -> Result<TrainerState, TrainError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("config.json"),
        serde_json::to_string_pretty(cfg)?,
    )?;
    let mut state = TrainerState::new(cfg.clone())?;
    let outcome = state.run(Some(out_dir));
    state.metrics.write_csv(&out_dir.join("metrics.csv"))?;
    outcome?;
    Ok(state)
}
