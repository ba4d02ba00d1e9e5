//! Dumps the seeded initial physics states of every environment as JSON,
//! for consumption by tools/gen_env_traces.py when (re)generating the
//! committed reference-trace fixtures.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scorer_lab::envs::{acrobot, breakout, cartpole, mountain_car};

const SEEDS: [u64; 3] = [17, 101, 4242];

fn main() {
    let mut entries = Vec::new();
    for &seed in &SEEDS {
        let cp = cartpole::CartPole::reset(&mut ChaCha8Rng::seed_from_u64(seed));
        entries.push(serde_json::json!({
            "env": "cartpole", "seed": seed, "state": cp.state,
        }));
        let ac = acrobot::Acrobot::reset(&mut ChaCha8Rng::seed_from_u64(seed));
        entries.push(serde_json::json!({
            "env": "acrobot", "seed": seed, "state": ac.state,
        }));
        let mc = mountain_car::MountainCar::reset(&mut ChaCha8Rng::seed_from_u64(seed));
        entries.push(serde_json::json!({
            "env": "mountaincar", "seed": seed, "state": mc.state,
        }));
        let br = breakout::Breakout::reset(&mut ChaCha8Rng::seed_from_u64(seed));
        entries.push(serde_json::json!({
            "env": "breakout", "seed": seed,
            "ball_x": br.ball_x, "ball_y": br.ball_y, "ball_dir": br.ball_dir,
            "paddle_x": br.paddle_x,
        }));
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({ "entries": entries })).unwrap()
    );
}
