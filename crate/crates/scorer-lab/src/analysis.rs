//! Representation-property probes: a fixed random-policy transition dataset,
//! representation/value extraction, and the five metrics (complexity
//! reduction, dynamics awareness, diversity, orthogonality, sparsity) with a
//! running L_max tracker shared across comparison groups.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::{derive_seed, EnvKind, EnvState};
use crate::linalg::{euclidean_distance, l2_norm, RealMatrix};
use crate::mlp::MlpError;
use crate::nets::{baseline_forward, PerceptionNet, QNet};
use crate::trainer::Regime;

pub const EPS_DIV: f64 = 1e-8;
pub const EPS_SPECIALIZATION: f64 = 1e-6;
pub const SPARSITY_THRESHOLD: f64 = 1e-10;
pub const DEFAULT_PROBE_SIZE: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("probe needs at least 2 samples, got {0}")]
    ProbeTooSmall(usize),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

/// Fixed random-policy transition set (s, s') pairs.
#[derive(Debug, Clone)]
pub struct ProbeDataset {
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub env_kind: EnvKind,
    pub seed: u64,
}

impl ProbeDataset {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn states(&self) -> RealMatrix {
        RealMatrix::from_rows(&self.pairs.iter().map(|(s, _)| s.clone()).collect::<Vec<_>>())
    }

    pub fn next_states(&self) -> RealMatrix {
        RealMatrix::from_rows(&self.pairs.iter().map(|(_, s)| s.clone()).collect::<Vec<_>>())
    }
}

/// Collects `n` uniform-random-policy transitions, deterministic per seed.
/// Terminal transitions keep the terminal successor; the episode then
/// restarts from the environment's own stream.
pub fn collect_probe(env_kind: EnvKind, seed: u64, n: usize) -> ProbeDataset {
    let mut env = EnvState::new(env_kind, derive_seed(seed, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut pairs = Vec::with_capacity(n);
    let mut obs = env.observation();
    while pairs.len() < n {
        let action = rng.gen_range(0..env_kind.action_dim());
        let result = env.step(action);
        pairs.push((obs, result.observation.clone()));
        obs = if result.done {
            env.reset_continue()
        } else {
            result.observation
        };
    }
    ProbeDataset {
        pairs,
        env_kind,
        seed,
    }
}

/// Per-sample random partner indices for dynamics awareness: one uniform
/// draw per sample from the probe's own representation set, self-pairing
/// excluded.
pub fn random_pairing(n: usize, seed: u64) -> Vec<usize> {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|j| {
            let r = rng.gen_range(0..n - 1);
            if r >= j {
                r + 1
            } else {
                r
            }
        })
        .collect()
}

/// The representation tap for a probe: the perception output for coupled
/// regimes, the depth-matched second hidden activation for the baseline.
pub fn representation_tap(
    phi: &PerceptionNet,
    theta: &QNet,
    regime: Regime,
    states: &RealMatrix,
) -> Result<RealMatrix, MlpError> {
    match regime {
        Regime::Baseline => Ok(baseline_forward(phi, theta, states)?.1),
        _ => Ok(phi.encode_batch(states)?.output().clone()),
    }
}

/// State values v_j = max_a Q(f_phi(s_j), a).
pub fn state_values(
    phi: &PerceptionNet,
    theta: &QNet,
    states: &RealMatrix,
) -> Result<Vec<f64>, MlpError> {
    let z = phi.encode_batch(states)?;
    let q = theta.forward_batch(z.output())?;
    Ok((0..states.rows())
        .map(|j| {
            q.q_values()
                .row(j)
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// L_rep = avg over ordered pairs i != j of d_V / (d_S + eps_div);
/// CR = 1 - L_rep / (l_max_out + eps_div) with the running maximum.
pub fn complexity_reduction(
    z: &RealMatrix,
    v: &[f64],
    l_max_in: f64,
) -> Result<(f64, f64, f64), AnalysisError> {
    let n = z.rows();
    if n < 2 || v.len() != n {
        return Err(AnalysisError::ProbeTooSmall(n.min(v.len())));
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d_v = (v[i] - v[j]).abs();
            let d_s = euclidean_distance(z.row(i), z.row(j));
            acc += d_v / (d_s + EPS_DIV);
        }
    }
    let l_rep = acc / (n * (n - 1)) as f64;
    let l_max_out = l_max_in.max(l_rep);
    let cr = 1.0 - l_rep / (l_max_out + EPS_DIV);
    Ok((cr, l_rep, l_max_out))
}

/// avg_j(||z_j - z_rand_j|| - ||z_j - z'_j||) / (avg_j ||z_j - z_rand_j|| + eps_div).
pub fn dynamics_awareness(
    z: &RealMatrix,
    z_next: &RealMatrix,
    rand_idx: &[usize],
) -> Result<f64, AnalysisError> {
    let n = z.rows();
    if n < 2 || z_next.rows() != n || rand_idx.len() != n {
        return Err(AnalysisError::ProbeTooSmall(n));
    }
    let mut num = 0.0;
    let mut rand_dist = 0.0;
    for j in 0..n {
        let d_rand = euclidean_distance(z.row(j), z.row(rand_idx[j]));
        let d_next = euclidean_distance(z.row(j), z_next.row(j));
        num += d_rand - d_next;
        rand_dist += d_rand;
    }
    Ok((num / n as f64) / (rand_dist / n as f64 + EPS_DIV))
}

/// 1 - Specialization with Specialization =
/// avg over i != j of min(1, (d_V/max d_V) / (d_S/max d_S + eps)); a batch
/// with max d_V = 0 has zero specialization by convention.
pub fn diversity(z: &RealMatrix, v: &[f64]) -> Result<f64, AnalysisError> {
    let n = z.rows();
    if n < 2 || v.len() != n {
        return Err(AnalysisError::ProbeTooSmall(n.min(v.len())));
    }
    let mut max_dv: f64 = 0.0;
    let mut max_ds: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_dv = max_dv.max((v[i] - v[j]).abs());
            max_ds = max_ds.max(euclidean_distance(z.row(i), z.row(j)));
        }
    }
    if max_dv == 0.0 {
        return Ok(1.0);
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dv_norm = (v[i] - v[j]).abs() / max_dv;
            let ds_norm = euclidean_distance(z.row(i), z.row(j)) / max_ds;
            acc += (dv_norm / (ds_norm + EPS_SPECIALIZATION)).min(1.0);
        }
    }
    Ok(1.0 - acc / (n * (n - 1)) as f64)
}

/// 1 - mean squared cosine similarity over unordered pairs i < j.
pub fn orthogonality(z: &RealMatrix) -> Result<f64, AnalysisError> {
    let n = z.rows();
    if n < 2 {
        return Err(AnalysisError::ProbeTooSmall(n));
    }
    let norms: Vec<f64> = (0..n).map(|i| l2_norm(z.row(i))).collect();
    let mut acc = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let cos = crate::linalg::dot(z.row(i), z.row(j)) / (norms[i] * norms[j] + EPS_DIV);
            acc += cos * cos;
        }
    }
    Ok(1.0 - 2.0 * acc / (n * (n - 1)) as f64)
}

/// Mean fraction of coordinates with |z| below the sparsity threshold.
pub fn sparsity(z: &RealMatrix) -> Result<f64, AnalysisError> {
    if z.rows() == 0 {
        return Err(AnalysisError::ProbeTooSmall(0));
    }
    let near_zero = z
        .data()
        .iter()
        .filter(|v| v.abs() < SPARSITY_THRESHOLD)
        .count();
    Ok(near_zero as f64 / z.data().len() as f64)
}

#[derive(Debug, Clone, Copy)]
pub struct PropertyReport {
    pub t_env: u64,
    pub l_rep: f64,
    pub l_max_running: f64,
    pub complexity_reduction: f64,
    pub dynamics_awareness: f64,
    pub diversity: f64,
    pub orthogonality: f64,
    pub sparsity: f64,
}

/// All five metrics for one representation snapshot, advancing the running
/// L_max.
pub fn evaluate_properties(
    t_env: u64,
    z: &RealMatrix,
    z_next: &RealMatrix,
    v: &[f64],
    rand_idx: &[usize],
    l_max_in: f64,
) -> Result<PropertyReport, AnalysisError> {
    let (cr, l_rep, l_max_out) = complexity_reduction(z, v, l_max_in)?;
    Ok(PropertyReport {
        t_env,
        l_rep,
        l_max_running: l_max_out,
        complexity_reduction: cr,
        dynamics_awareness: dynamics_awareness(z, z_next, rand_idx)?,
        diversity: diversity(z, v)?,
        orthogonality: orthogonality(z)?,
        sparsity: sparsity(z)?,
    })
}

/// Complexity reduction on identical representations with values from the
/// trained Q-network versus a freshly initialized one of the same
/// architecture; L_max is shared across the pair.
pub fn random_q_cr_probe(
    phi: &PerceptionNet,
    theta: &QNet,
    probe: &ProbeDataset,
    seed: u64,
    l_max_in: f64,
) -> Result<(f64, f64, f64), AnalysisError> {
    let states = probe.states();
    let z = phi.encode_batch(&states)?.output().clone();
    let v_trained = state_values(phi, theta, &states)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta_rand = match theta.variant() {
        crate::nets::QVariant::Plain => {
            let hidden = match &theta.head {
                crate::nets::QHead::Plain(p) => p.layers[0].output_dim(),
                _ => unreachable!(),
            };
            QNet::new_plain(
                theta.latent_dim(),
                hidden,
                theta.action_dim,
                crate::mlp::Activation::Relu,
                &mut rng,
            )
        }
        crate::nets::QVariant::Dueling => {
            let (vh, ah) = match &theta.head {
                crate::nets::QHead::Dueling { value, advantage } => {
                    (value.layers[0].output_dim(), advantage.layers[0].output_dim())
                }
                _ => unreachable!(),
            };
            QNet::new_dueling(
                theta.latent_dim(),
                vh,
                ah,
                theta.action_dim,
                crate::mlp::Activation::Relu,
                &mut rng,
            )
        }
    };
    let v_rand = state_values(phi, &theta_rand, &states)?;
    // Shared L_max: both L_rep values enter the running maximum before
    // either CR is finalized.
    let (_, l_rep_trained, m1) = complexity_reduction(&z, &v_trained, l_max_in)?;
    let (_, l_rep_rand, l_max) = complexity_reduction(&z, &v_rand, m1)?;
    let cr_trained = 1.0 - l_rep_trained / (l_max + EPS_DIV);
    let cr_rand = 1.0 - l_rep_rand / (l_max + EPS_DIV);
    Ok((cr_trained, cr_rand, l_max))
}

/// Re-finalizes CR columns across a comparison group with the max L_rep over
/// every report in the group (shared-L_max semantics).
pub fn finalize_shared_l_max(groups: &mut [Vec<PropertyReport>]) {
    let mut l_max: f64 = 0.0;
    for g in groups.iter() {
        for r in g.iter() {
            l_max = l_max.max(r.l_rep);
        }
    }
    for g in groups.iter_mut() {
        for r in g.iter_mut() {
            r.l_max_running = l_max;
            r.complexity_reduction = 1.0 - r.l_rep / (l_max + EPS_DIV);
        }
    }
}

pub fn write_properties_csv(
    path: &Path,
    reports: &[PropertyReport],
) -> Result<(), std::io::Error> {
    let mut out = String::from("t_env,l_rep,cr,dyn_aware,diversity,orthogonality,sparsity\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t_env,
            r.l_rep,
            r.complexity_reduction,
            r.dynamics_awareness,
            r.diversity,
            r.orthogonality,
            r.sparsity
        ));
    }
    let mut f = fs::File::create(path)?;
    f.write_all(out.as_bytes())
}
