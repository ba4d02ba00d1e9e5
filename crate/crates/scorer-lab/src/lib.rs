//! A desk-scale laboratory for Stackelberg-coupled representation and
//! reinforcement learning: a two-timescale leader (perception) / follower
//! (Q-network) training loop with baselines, deterministic environments,
//! representation-property probes, and evaluation statistics.

pub mod adam;
pub mod analysis;
pub mod checkpoint;
pub mod envs;
pub mod linalg;
pub mod mlp;
pub mod nets;
pub mod objectives;
pub mod presets;
pub mod replay;
pub mod report;
pub mod stats;
pub mod trainer;
