//! Acceptance gate: end-to-end checks of gradient fidelity, leader/follower
//! coupling semantics, update scheduling, desk-scale learning, the
//! statistics and representation-metric oracles, environment trace
//! fidelity, and bit-level run determinism.
//!
//! The two training-based checks (CartPole learning, Breakout ablation) run
//! real multi-seed experiments and dominate the suite's wall time.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scorer_lab::envs::{obs_hash, EnvKind, EnvState};
use scorer_lab::linalg::RealMatrix;
use scorer_lab::mlp::Activation;
use scorer_lab::nets::{PerceptionNet, QNet};
use scorer_lab::objectives::{
    bellman_targets, follower_loss_grad, leader_msbe_loss_grad, leader_var_rn_loss_grad,
    BellmanTargets, LeaderObjectiveSpec, Minibatch,
};
use scorer_lab::presets::resolve;
use scorer_lab::report::{smoothed_curve, smoothing_window_steps};
use scorer_lab::stats::{iqm, steps_to_threshold, welch_t_test};
use scorer_lab::trainer::{
    boundaries_crossed, train, ControlVariant, Regime, TrainConfig, TrainerState,
};
use scorer_lab::analysis;

// ---------------------------------------------------------------------------
// 1. Gradient fidelity: backprop vs central finite differences for every
//    network shape (plain and dueling Q heads at control and MinAtar sizes)
//    and all three losses, over >= 100 random instances in under a minute.
// ---------------------------------------------------------------------------

struct ArchSpec {
    state_dim: usize,
    latent_dim: usize,
    depth: usize,
    q_hidden: usize,
    value_hidden: usize,
    advantage_hidden: usize,
    action_dim: usize,
    dueling: bool,
}

const ARCHS: [ArchSpec; 4] = [
    // Control-scale plain head (DQN / DDQN table).
    ArchSpec {
        state_dim: 4,
        latent_dim: 64,
        depth: 1,
        q_hidden: 64,
        value_hidden: 0,
        advantage_hidden: 0,
        action_dim: 2,
        dueling: false,
    },
    // MinAtar-scale plain head.
    ArchSpec {
        state_dim: 400,
        latent_dim: 128,
        depth: 2,
        q_hidden: 128,
        value_hidden: 0,
        advantage_hidden: 0,
        action_dim: 6,
        dueling: false,
    },
    // Control-scale dueling head.
    ArchSpec {
        state_dim: 6,
        latent_dim: 64,
        depth: 1,
        q_hidden: 0,
        value_hidden: 32,
        advantage_hidden: 32,
        action_dim: 3,
        dueling: true,
    },
    // MinAtar-scale dueling head.
    ArchSpec {
        state_dim: 400,
        latent_dim: 128,
        depth: 2,
        q_hidden: 0,
        value_hidden: 64,
        advantage_hidden: 64,
        action_dim: 6,
        dueling: true,
    },
];

fn random_nets(spec: &ArchSpec, rng: &mut ChaCha8Rng) -> (PerceptionNet, QNet) {
    let phi = PerceptionNet::new(
        spec.state_dim,
        spec.latent_dim,
        spec.depth,
        Activation::Relu,
        rng,
    );
    let theta = if spec.dueling {
        QNet::new_dueling(
            spec.latent_dim,
            spec.value_hidden,
            spec.advantage_hidden,
            spec.action_dim,
            Activation::Relu,
            rng,
        )
    } else {
        QNet::new_plain(
            spec.latent_dim,
            spec.q_hidden,
            spec.action_dim,
            Activation::Relu,
            rng,
        )
    };
    (phi, theta)
}

fn random_batch(spec: &ArchSpec, n: usize, rng: &mut ChaCha8Rng) -> (Minibatch, BellmanTargets) {
    let mut row = || -> Vec<f64> { (0..spec.state_dim).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let states = RealMatrix::from_rows(&(0..n).map(|_| row()).collect::<Vec<_>>());
    let next_states = RealMatrix::from_rows(&(0..n).map(|_| row()).collect::<Vec<_>>());
    let batch = Minibatch {
        states,
        actions: (0..n).map(|_| rng.gen_range(0..spec.action_dim)).collect(),
        rewards: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        next_states,
        dones: (0..n).map(|_| f64::from(rng.gen_bool(0.2))).collect(),
    };
    // Fixed synthetic targets: the losses treat y as a constant either way.
    let y = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    (batch, BellmanTargets { y, gamma: 0.99 })
}

/// Central finite differences of `loss` at `flat0` along the given
/// coordinates.
fn fd_coords(
    mut loss: impl FnMut(&[f64]) -> f64,
    flat0: &[f64],
    coords: &[usize],
    step: f64,
) -> Vec<f64> {
    coords
        .iter()
        .map(|&i| {
            let mut flat = flat0.to_vec();
            flat[i] = flat0[i] + step;
            let hi = loss(&flat);
            flat[i] = flat0[i] - step;
            let lo = loss(&flat);
            (hi - lo) / (2.0 * step)
        })
        .collect()
}

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / scale.max(1e-9)
}

#[test]
fn gradient_fidelity_matches_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    let step = 1e-5;
    let coords_per_instance = 24;
    let mut instances = 0usize;
    let spec_var_rn = LeaderObjectiveSpec::var_rn(0.1, 1.0);

    for arch in &ARCHS {
        for trial in 0..9 {
            let (phi, theta) = random_nets(arch, &mut rng);
            let (batch, targets) = random_batch(arch, 4, &mut rng);

            // Follower MSBE, gradient in theta.
            let lg = follower_loss_grad(&batch, &targets, &phi, &theta).unwrap();
            let flat0 = theta.flatten();
            let coords: Vec<usize> = (0..coords_per_instance)
                .map(|_| rng.gen_range(0..flat0.len()))
                .collect();
            let mut scratch = theta.clone();
            let numeric = fd_coords(
                |flat| {
                    scratch.assign_flat(flat);
                    follower_loss_grad(&batch, &targets, &phi, &scratch)
                        .unwrap()
                        .loss
                },
                &flat0,
                &coords,
                step,
            );
            let analytic: Vec<f64> = coords.iter().map(|&i| lg.grads[i]).collect();
            let err = relative_error(&analytic, &numeric);
            assert!(err < 1e-4, "follower msbe rel err {err} (trial {trial})");
            instances += 1;

            // Leader losses, gradient in phi through the detached theta.
            let flat0 = phi.params.flatten();
            let coords: Vec<usize> = (0..coords_per_instance)
                .map(|_| rng.gen_range(0..flat0.len()))
                .collect();
            for var_rn in [false, true] {
                let lg = if var_rn {
                    leader_var_rn_loss_grad(&batch, &targets, &phi, &theta, &spec_var_rn).unwrap()
                } else {
                    leader_msbe_loss_grad(&batch, &targets, &phi, &theta).unwrap()
                };
                let mut scratch = phi.clone();
                let numeric = fd_coords(
                    |flat| {
                        scratch.params.assign_flat(flat);
                        if var_rn {
                            leader_var_rn_loss_grad(&batch, &targets, &scratch, &theta, &spec_var_rn)
                                .unwrap()
                                .loss
                        } else {
                            leader_msbe_loss_grad(&batch, &targets, &scratch, &theta)
                                .unwrap()
                                .loss
                        }
                    },
                    &flat0,
                    &coords,
                    step,
                );
                let analytic: Vec<f64> = coords.iter().map(|&i| lg.grads[i]).collect();
                let err = relative_error(&analytic, &numeric);
                assert!(err < 1e-4, "leader var_rn={var_rn} rel err {err} (trial {trial})");
                instances += 1;
            }
        }
    }
    assert!(instances >= 100, "only {instances} instances checked");
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 60,
        "gradient fidelity took {elapsed:?}, budget is one minute"
    );
    println!("PASS gradient fidelity: {instances} instances in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 2. Anticipation semantics: the leader differentiates through the theta
//    snapshot taken before the phase's follower step (bit-equal), and that
//    gradient differs from the post-update gradient the team regime uses.
// ---------------------------------------------------------------------------

fn tiny_config(regime: Regime) -> TrainConfig {
    TrainConfig {
        env: EnvKind::CartPole,
        regime,
        control_variant: ControlVariant::Dqn,
        leader_objective: LeaderObjectiveSpec::msbe(),
        seed: 7,
        total_timesteps: 600,
        learning_starts: 100,
        k_train: 4,
        k_leader: 8,
        k_target: 100,
        tau: 1.0,
        gamma: 0.99,
        lr_follower: 1e-3,
        lr_leader: 1e-3,
        linear_lr_decay: true,
        eps_start: 1.0,
        eps_finish: 0.01,
        eps_anneal_steps: 400,
        batch_size: 16,
        buffer_size: 1000,
        num_envs: 2,
        latent_dim: 8,
        q_hidden_dim: 8,
        value_hidden_dim: 8,
        advantage_hidden_dim: 8,
        log_every: 100,
        checkpoint_every: None,
    }
}

#[test]
fn anticipation_uses_pre_phase_snapshot_bit_exactly() {
    let cfg = tiny_config(Regime::Scorer);
    let mut state = TrainerState::new(cfg.clone()).unwrap();
    while state.t_env < cfg.learning_starts {
        state.interaction_step().unwrap();
    }
    // Replicate the upcoming phase's sampling stream and pre-phase state.
    let mut rng_clone = state.rng_sample.clone();
    let sampled = state.buffer.sample(cfg.batch_size, &mut rng_clone).unwrap();
    let batch = Minibatch::from_transitions(&sampled);
    let targets = bellman_targets(
        &batch,
        &state.targets.phi_target,
        &state.targets.theta_target,
        &state.theta,
        cfg.gamma,
        false,
    )
    .unwrap();
    let theta_pre = state.theta.clone();
    let expected = leader_msbe_loss_grad(&batch, &targets, &state.phi, &theta_pre).unwrap();
    let mut adam_clone = state.adam_leader.clone();
    let mut expected_phi = state.phi.params.flatten();
    adam_clone.apply(&mut expected_phi, &expected.grads).unwrap();

    let boundary = (state.t_env / cfg.k_leader + 1) * cfg.k_leader;
    let diag = state.update_phase(boundary).unwrap();
    assert!(diag.leader_loss.is_some(), "leader step must fire");
    assert_eq!(
        state.phi.params.flatten(),
        expected_phi,
        "the applied leader step must match the pre-phase-theta gradient bit for bit"
    );
    // The follower step changed theta, so the anticipated gradient must
    // differ from the post-update (team-style) one.
    assert_ne!(theta_pre.flatten(), state.theta.flatten());
    let post = leader_msbe_loss_grad(&batch, &targets, &state.phi, &state.theta).unwrap();
    assert_ne!(expected.grads, post.grads);

    // Team regime: the leader must see the post-update theta instead.
    let cfg = tiny_config(Regime::TeamCoupling);
    let mut state = TrainerState::new(cfg.clone()).unwrap();
    while state.t_env < cfg.learning_starts {
        state.interaction_step().unwrap();
    }
    let mut rng_clone = state.rng_sample.clone();
    let sampled = state.buffer.sample(cfg.batch_size, &mut rng_clone).unwrap();
    let batch = Minibatch::from_transitions(&sampled);
    let targets = bellman_targets(
        &batch,
        &state.targets.phi_target,
        &state.targets.theta_target,
        &state.theta,
        cfg.gamma,
        false,
    )
    .unwrap();
    let mut scratch_theta = state.theta.clone();
    let mut scratch_adam = state.adam_follower.clone();
    let lg = follower_loss_grad(&batch, &targets, &state.phi, &scratch_theta).unwrap();
    let mut flat = scratch_theta.flatten();
    scratch_adam.apply(&mut flat, &lg.grads).unwrap();
    scratch_theta.assign_flat(&flat);
    let expected = leader_msbe_loss_grad(&batch, &targets, &state.phi, &scratch_theta).unwrap();
    let mut adam_clone = state.adam_leader.clone();
    let mut expected_phi = state.phi.params.flatten();
    adam_clone.apply(&mut expected_phi, &expected.grads).unwrap();
    let boundary = (state.t_env / cfg.k_train + 1) * cfg.k_train;
    state.update_phase(boundary).unwrap();
    assert_eq!(state.phi.params.flatten(), expected_phi);
    println!("PASS anticipation semantics");
}

// ---------------------------------------------------------------------------
// 3. Scheduling arithmetic for the paper-minatar preset over 1e5 env steps.
// ---------------------------------------------------------------------------

#[test]
fn paper_minatar_schedule_counts_over_1e5_env_steps() {
    let preset = resolve("paper-minatar").unwrap();
    let horizon: u64 = 100_000;

    // Walk the same boundary arithmetic the trainer uses, in vec-env sized
    // chunks plus a final partial chunk so the horizon lands exactly.
    let mut follower = 0u64;
    let mut leader = 0u64;
    let mut target_boundaries = Vec::new();
    let mut next_target_at = (preset.learning_starts / preset.k_target + 1) * preset.k_target;
    let mut t = 0u64;
    while t < horizon {
        let t1 = (t + preset.num_envs as u64).min(horizon);
        if t1 > preset.learning_starts {
            let lo = t.max(preset.learning_starts);
            let mut b = (lo / preset.k_train + 1) * preset.k_train;
            while b <= t1 {
                follower += 1;
                if b % preset.k_leader == 0 {
                    leader += 1;
                }
                if b >= next_target_at {
                    target_boundaries.push(b);
                    while next_target_at <= b {
                        next_target_at += preset.k_target;
                    }
                }
                b += preset.k_train;
            }
        }
        t = t1;
    }

    assert_eq!(follower, 22_500, "follower updates over 1e5 steps");
    assert_eq!(leader, 11_250, "leader updates over 1e5 steps");
    assert_eq!(follower, 2 * leader, "follower:leader is exactly 2:1");
    assert_eq!(
        follower,
        boundaries_crossed(preset.k_train, preset.learning_starts, horizon),
        "chunked walk agrees with the closed form"
    );
    assert_eq!(target_boundaries.len(), 90, "target updates over 1e5 steps");
    for (i, &b) in target_boundaries.iter().enumerate() {
        assert_eq!(
            b,
            preset.learning_starts + (i as u64 + 1) * preset.k_target,
            "targets refresh every 1e3 env steps"
        );
    }
    println!("PASS scheduling arithmetic: follower 22500, leader 11250, targets 90");
}

// ---------------------------------------------------------------------------
// 4. Desk-scale learning: CartPole, 5 seeds per regime, smoothed return
//    >= 400 within 2e5 steps in at least 4 of 5 seeds, under 15 minutes.
// ---------------------------------------------------------------------------

#[test]
fn cartpole_desk_scale_reaches_400_for_all_regimes() {
    let start = Instant::now();
    let preset = resolve("desk-control").unwrap();
    let dir = tempfile::tempdir().unwrap();
    for regime in [Regime::Baseline, Regime::TeamCoupling, Regime::Scorer] {
        let mut successes = 0;
        for seed in 0..5u64 {
            let cfg = preset.config(EnvKind::CartPole, regime, ControlVariant::Dqn, seed);
            let run_dir = dir.path().join(format!("{}_{}", regime.name(), seed));
            let state = train(&cfg, &run_dir).unwrap();
            let returns = state.metrics.series(scorer_lab::trainer::MetricKind::Return);
            let curve = smoothed_curve(
                &returns,
                cfg.total_timesteps,
                smoothing_window_steps(cfg.env),
            )
            .unwrap();
            let best = curve.iter().map(|&(_, v)| v).fold(f64::MIN, f64::max);
            if best >= 400.0 {
                successes += 1;
            }
            println!(
                "  cartpole {} seed {seed}: best smoothed return {best:.1}",
                regime.name()
            );
        }
        assert!(
            successes >= 4,
            "{} reached 400 in only {successes}/5 seeds",
            regime.name()
        );
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs() < 900,
        "cartpole desk-scale check took {elapsed:?}, budget is 15 minutes"
    );
    println!("PASS desk-scale learning in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 5. Directional ablation: Breakout, 3 seeds, 2e6 steps, DQN base. Final
//    3-seed mean smoothed return must rank leader-anticipation >= team
//    coupling >= end-to-end baseline.
// ---------------------------------------------------------------------------

#[test]
fn breakout_ablation_final_returns_rank_in_order() {
    let start = Instant::now();
    let preset = resolve("desk-minatar").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut final_means = Vec::new();
    for regime in [Regime::Baseline, Regime::TeamCoupling, Regime::Scorer] {
        let mut finals = Vec::new();
        for seed in 0..3u64 {
            let cfg = preset.config(EnvKind::Breakout, regime, ControlVariant::Dqn, seed);
            let run_dir = dir.path().join(format!("{}_{}", regime.name(), seed));
            let state = train(&cfg, &run_dir).unwrap();
            let returns = state.metrics.series(scorer_lab::trainer::MetricKind::Return);
            let curve = smoothed_curve(
                &returns,
                cfg.total_timesteps,
                smoothing_window_steps(cfg.env),
            )
            .unwrap();
            let final_value = curve.last().unwrap().1;
            finals.push(final_value);
            println!(
                "  breakout {} seed {seed}: final smoothed return {final_value:.2} ({:?} elapsed)",
                regime.name(),
                start.elapsed()
            );
        }
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        final_means.push((regime.name(), mean));
    }
    println!("  breakout final means: {final_means:?}");
    let baseline = final_means[0].1;
    let team = final_means[1].1;
    let scorer = final_means[2].1;
    assert!(
        team >= baseline,
        "team coupling ({team:.3}) must not trail the end-to-end baseline ({baseline:.3})"
    );
    assert!(
        scorer >= team,
        "leader anticipation ({scorer:.3}) must not trail team coupling ({team:.3})"
    );
    println!("PASS breakout ablation rank order in {:?}", start.elapsed());
}

// ---------------------------------------------------------------------------
// 6. Statistics oracles.
// ---------------------------------------------------------------------------

#[test]
fn statistics_oracles() {
    // IQM of 1..10 under the floor(n/4)-per-side trim: drop {1,2} and
    // {9,10}, mean of 3..8 = 5.5.
    let values: Vec<f64> = (1..=10).map(f64::from).collect();
    assert_eq!(iqm(&values).unwrap(), 5.5);

    // Identical samples: t = 0, p = 1 exactly.
    let a = [3.0, 4.0, 5.0, 6.0];
    let r = welch_t_test(&a, &a).unwrap();
    assert_eq!(r.p_two_sided, 1.0);

    // Fixed fixtures, reference values computed with an independent
    // implementation (tools/gen_welch_fixtures.py).
    let a = [
        0.496714153, -0.138264301, 0.647688538, 1.523029856, -0.234153375, -0.234136957,
        1.579212816, 0.767434729,
    ];
    let b = [
        -0.469474386, 1.042256004, 0.241962272, -1.413037391, -1.722765693, -1.328186048,
        0.196861236, 1.338442170, 0.171368281, -0.115648282,
    ];
    let r = welch_t_test(&a, &b).unwrap();
    assert!((r.t - 1.817635887674).abs() < 1e-6);
    assert!((r.p_two_sided - 0.088078919777).abs() < 1e-6);

    let a = [5.1, 4.9, 6.2, 5.7, 5.5, 5.9];
    let b = [4.2, 4.8, 4.4, 4.9, 4.6];
    let r = welch_t_test(&a, &b).unwrap();
    assert!((r.t - 4.090485149846).abs() < 1e-6);
    assert!((r.p_two_sided - 0.003286325145).abs() < 1e-6);

    // Hand-computed threshold crossings on a synthetic curve: the first
    // on-grid point at or above the threshold.
    let curve = [(100u64, 1.0), (200, 3.0), (300, 2.0), (400, 5.0)];
    assert_eq!(steps_to_threshold(&curve, 3.0), Some(200));
    assert_eq!(steps_to_threshold(&curve, 3.5), Some(400));
    assert_eq!(steps_to_threshold(&curve, 1.0), Some(100));
    assert_eq!(steps_to_threshold(&curve, 6.0), None);
    println!("PASS statistics oracles");
}

// ---------------------------------------------------------------------------
// 7. Representation metrics vs an independent O(n^2) brute force.
// ---------------------------------------------------------------------------

fn bf_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let d = a[k] - b[k];
        s += d * d;
    }
    s.sqrt()
}

fn bf_l_rep(z: &RealMatrix, v: &[f64]) -> f64 {
    let n = z.rows();
    let mut acc = 0.0;
    // Deliberately transposed traversal relative to the library code.
    for j in 0..n {
        for i in 0..n {
            if i != j {
                acc += (v[i] - v[j]).abs() / (bf_dist(z.row(i), z.row(j)) + 1e-8);
            }
        }
    }
    acc / (n * (n - 1)) as f64
}

fn bf_dynamics_awareness(z: &RealMatrix, z_next: &RealMatrix, rand_idx: &[usize]) -> f64 {
    let n = z.rows();
    let mut diffs = 0.0;
    let mut rands = 0.0;
    for j in 0..n {
        let d_rand = bf_dist(z.row(j), z.row(rand_idx[j]));
        diffs += d_rand - bf_dist(z.row(j), z_next.row(j));
        rands += d_rand;
    }
    (diffs / n as f64) / (rands / n as f64 + 1e-8)
}

fn bf_diversity(z: &RealMatrix, v: &[f64]) -> f64 {
    let n = z.rows();
    let mut max_dv = 0.0f64;
    let mut max_ds = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            max_dv = max_dv.max((v[i] - v[j]).abs());
            max_ds = max_ds.max(bf_dist(z.row(i), z.row(j)));
        }
    }
    if max_dv == 0.0 {
        return 1.0;
    }
    let mut acc = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                let dv = (v[i] - v[j]).abs() / max_dv;
                let ds = bf_dist(z.row(i), z.row(j)) / max_ds;
                acc += (dv / (ds + 1e-6)).min(1.0);
            }
        }
    }
    1.0 - acc / (n * (n - 1)) as f64
}

fn bf_orthogonality(z: &RealMatrix) -> f64 {
    let n = z.rows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i < j {
                let mut dot = 0.0;
                for k in 0..z.cols() {
                    dot += z.get(i, k) * z.get(j, k);
                }
                let cos = dot / (bf_dist(z.row(i), &vec![0.0; z.cols()]) * bf_dist(z.row(j), &vec![0.0; z.cols()]) + 1e-8);
                acc += cos * cos;
            }
        }
    }
    1.0 - 2.0 * acc / (n * (n - 1)) as f64
}

fn bf_sparsity(z: &RealMatrix) -> f64 {
    let mut count = 0usize;
    for r in 0..z.rows() {
        for c in 0..z.cols() {
            if z.get(r, c).abs() < 1e-10 {
                count += 1;
            }
        }
    }
    count as f64 / (z.rows() * z.cols()) as f64
}

#[test]
fn representation_metrics_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    for trial in 0..10 {
        let n = 50;
        let d = 16;
        let mut mat = |sparse: bool| -> RealMatrix {
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..d)
                        .map(|_| {
                            if sparse && rng.gen_bool(0.3) {
                                0.0
                            } else {
                                rng.gen_range(-2.0..2.0)
                            }
                        })
                        .collect()
                })
                .collect();
            RealMatrix::from_rows(&rows)
        };
        let z = mat(trial % 2 == 0);
        let z_next = mat(false);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let rand_idx = analysis::random_pairing(n, trial as u64);
        let l_max_in = rng.gen_range(0.0..3.0);

        let (cr, l_rep, l_max_out) = analysis::complexity_reduction(&z, &v, l_max_in).unwrap();
        let l_rep_bf = bf_l_rep(&z, &v);
        assert!((l_rep - l_rep_bf).abs() < 1e-12, "l_rep trial {trial}");
        let cr_bf = 1.0 - l_rep_bf / (l_max_in.max(l_rep_bf) + 1e-8);
        assert!((cr - cr_bf).abs() < 1e-12, "cr trial {trial}");
        assert_eq!(l_max_out, l_max_in.max(l_rep));

        let da = analysis::dynamics_awareness(&z, &z_next, &rand_idx).unwrap();
        assert!(
            (da - bf_dynamics_awareness(&z, &z_next, &rand_idx)).abs() < 1e-12,
            "dynamics awareness trial {trial}"
        );
        let div = analysis::diversity(&z, &v).unwrap();
        assert!((div - bf_diversity(&z, &v)).abs() < 1e-12, "diversity trial {trial}");
        let orth = analysis::orthogonality(&z).unwrap();
        assert!(
            (orth - bf_orthogonality(&z)).abs() < 1e-12,
            "orthogonality trial {trial}"
        );
        let sp = analysis::sparsity(&z).unwrap();
        assert!((sp - bf_sparsity(&z)).abs() < 1e-12, "sparsity trial {trial}");
    }

    // Trivial edge cases.
    let n = 8;
    let eye = RealMatrix::identity(n);
    let zeros = RealMatrix::zeros(n, 4);
    let v_const = vec![2.5; n];
    let v_vary: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let idx = analysis::random_pairing(n, 1);

    // Constant values: L_rep = 0, so CR = 1 against any positive history.
    let (cr, l_rep, _) = analysis::complexity_reduction(&eye, &v_const, 1.0).unwrap();
    assert_eq!(l_rep, 0.0);
    assert_eq!(cr, 1.0);
    // Successor equal to source: dynamics awareness 1 (up to the division
    // epsilon).
    let da = analysis::dynamics_awareness(&eye, &eye, &idx).unwrap();
    assert!((da - 1.0).abs() < 1e-7);
    // Orthonormal rows: orthogonality exactly 1.
    assert_eq!(analysis::orthogonality(&eye).unwrap(), 1.0);
    // All-zero representation: sparsity exactly 1.
    assert_eq!(analysis::sparsity(&zeros).unwrap(), 1.0);
    // Constant values again: zero specialization, diversity 1.
    assert_eq!(analysis::diversity(&eye, &v_const).unwrap(), 1.0);
    assert!(analysis::diversity(&eye, &v_vary).unwrap() < 1.0);
    println!("PASS representation metrics vs brute force");
}

// ---------------------------------------------------------------------------
// 8. Environment fidelity: committed seeded traces replay with identical
//    rewards, done flags, and observation hashes.
// ---------------------------------------------------------------------------

#[test]
fn environment_traces_replay_identically() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/env_traces.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut env: Option<EnvState> = None;
    let mut current_key = (String::new(), 0u64);
    let mut rows = 0usize;
    let mut traces = 0usize;
    for line in text.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 7, "bad fixture row: {line}");
        let (name, seed) = (f[0].to_string(), f[1].parse::<u64>().unwrap());
        let t: u64 = f[2].parse().unwrap();
        let action: usize = f[3].parse().unwrap();
        let reward: f64 = f[4].parse().unwrap();
        let done = f[5] == "true";
        let hash: u64 = f[6].parse().unwrap();
        if (name.clone(), seed) != current_key {
            assert_eq!(t, 1, "traces must start at t = 1");
            env = Some(EnvState::new(EnvKind::parse(&name).unwrap(), seed));
            current_key = (name.clone(), seed);
            traces += 1;
        }
        let result = env.as_mut().unwrap().step(action);
        assert_eq!(result.reward, reward, "{name} seed {seed} t {t}: reward");
        assert_eq!(result.done, done, "{name} seed {seed} t {t}: done flag");
        assert_eq!(
            obs_hash(&result.observation),
            hash,
            "{name} seed {seed} t {t}: observation hash"
        );
        rows += 1;
    }
    assert!(traces >= 12, "expected traces for 4 envs x 3 seeds, saw {traces}");
    assert!(rows > 1000, "suspiciously short fixture file: {rows} rows");
    println!("PASS environment fidelity: {rows} steps across {traces} traces");
}

// ---------------------------------------------------------------------------
// 9. Determinism: identical (config, seed) reruns produce byte-identical
//    metrics.csv files.
// ---------------------------------------------------------------------------

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let preset = resolve("desk-control").unwrap();
    let mut cfg = preset.config(EnvKind::CartPole, Regime::Scorer, ControlVariant::Dqn, 11);
    cfg.total_timesteps = 30_000;

    let mut breakout_cfg = resolve("desk-minatar").unwrap().config(
        EnvKind::Breakout,
        Regime::TeamCoupling,
        ControlVariant::DuelingDdqn,
        5,
    );
    breakout_cfg.leader_objective = LeaderObjectiveSpec::var_rn(0.1, 1.0);
    breakout_cfg.total_timesteps = 16_000;
    breakout_cfg.learning_starts = 2_000;
    breakout_cfg.eps_anneal_steps = 10_000;

    for (tag, cfg) in [("cartpole", cfg), ("breakout", breakout_cfg)] {
        let a = dir.path().join(format!("{tag}_a"));
        let b = dir.path().join(format!("{tag}_b"));
        train(&cfg, &a).unwrap();
        train(&cfg, &b).unwrap();
        let bytes_a = std::fs::read(a.join("metrics.csv")).unwrap();
        let bytes_b = std::fs::read(b.join("metrics.csv")).unwrap();
        assert!(!bytes_a.is_empty());
        assert_eq!(bytes_a, bytes_b, "{tag}: metrics.csv must rerun byte-identically");
    }
    println!("PASS determinism");
}
