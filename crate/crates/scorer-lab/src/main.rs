//! Command-line entry point: train runs across seeds, probe checkpoints,
//! and aggregate metrics into report tables and SVG curves.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use scorer_lab::envs::EnvKind;
use scorer_lab::objectives::{LeaderObjectiveKind, LeaderObjectiveSpec};
use scorer_lab::presets;
use scorer_lab::report::{
    analyze_runs, load_run, render_curves_svg, variant_curves, write_report_csv,
    write_significance_csv, VariantGroup,
};
use scorer_lab::trainer::{train, ControlVariant, Regime, TrainConfig};

#[derive(Parser)]
#[command(
    name = "scorer-lab",
    about = "Stackelberg-coupled representation and reinforcement learning laboratory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run deterministic training, one run directory per seed.
    Train(TrainArgs),
    /// Probe run checkpoints into properties.csv (shared L_max across runs).
    Analyze(AnalyzeArgs),
    /// Aggregate run directories into report.csv, significance.csv, curves.svg.
    Report(ReportArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Environment: cartpole, acrobot, mountaincar, breakout.
    #[arg(long)]
    env: String,
    /// Control variant: dqn, ddqn, dueling-dqn, dueling-ddqn.
    #[arg(long, default_value = "dqn")]
    algo: String,
    /// Coupling regime: baseline, team, scorer.
    #[arg(long, default_value = "scorer")]
    regime: String,
    /// Leader objective: msbe or var-rn.
    #[arg(long = "leader-obj", default_value = "msbe")]
    leader_obj: String,
    /// Comma-separated list of distinct seeds.
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    /// Preset name: paper-minatar, paper-control, desk-minatar, desk-control.
    #[arg(long)]
    preset: String,
    /// Output directory; one subdirectory per seed is created.
    #[arg(long)]
    out: PathBuf,
    /// Override the preset's total env steps.
    #[arg(long = "total-steps")]
    total_steps: Option<u64>,
    /// Checkpoint interval in env steps (the final step always checkpoints).
    #[arg(long = "checkpoint-every")]
    checkpoint_every: Option<u64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run directories to probe.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Seed for the fixed random-policy probe dataset.
    #[arg(long = "probe-seed", default_value_t = 0)]
    probe_seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directories; grouped into variants by their resolved configs.
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Reward thresholds for steps-to-threshold columns.
    #[arg(long, value_delimiter = ',')]
    thresholds: Vec<f64>,
    /// Directory receiving report.csv, significance.csv, curves.svg.
    #[arg(long)]
    out: PathBuf,
}

fn parse_leader_obj(name: &str, preset: &presets::Preset) -> Result<LeaderObjectiveSpec, String> {
    match name.to_ascii_lowercase().as_str() {
        "msbe" => Ok(LeaderObjectiveSpec::msbe()),
        "var-rn" | "varrn" => Ok(preset.var_rn_objective()),
        other => Err(format!("unknown leader objective: {other} (expected msbe, var-rn)")),
    }
}

fn worker_cap() -> usize {
    std::env::var("SCORER_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

fn cmd_train(args: &TrainArgs) -> Result<(), String> {
    let env = EnvKind::parse(&args.env).map_err(|e| e.to_string())?;
    let algo = ControlVariant::parse(&args.algo).map_err(|e| e.to_string())?;
    let regime = Regime::parse(&args.regime).map_err(|e| e.to_string())?;
    let preset = presets::resolve(&args.preset).map_err(|e| e.to_string())?;
    let leader_obj = parse_leader_obj(&args.leader_obj, &preset)?;
    let mut unique = args.seeds.clone();
    unique.sort_unstable();
    unique.dedup();
    if unique.len() != args.seeds.len() {
        return Err("seeds must be distinct".into());
    }

    let mut configs: Vec<(u64, TrainConfig)> = Vec::new();
    for &seed in &args.seeds {
        let mut cfg = preset.config(env, regime, algo, seed);
        cfg.leader_objective = leader_obj;
        if let Some(total) = args.total_steps {
            cfg.total_timesteps = total;
        }
        cfg.checkpoint_every = args.checkpoint_every;
        cfg.validate().map_err(|e| e.to_string())?;
        configs.push((seed, cfg));
    }

    // Seeds run as isolated workers, at most SCORER_LAB_THREADS at a time.
    let cap = worker_cap();
    let mut failures = Vec::new();
    for chunk in configs.chunks(cap) {
        let handles: Vec<_> = chunk
            .iter()
            .map(|(seed, cfg)| {
                let seed = *seed;
                let cfg = cfg.clone();
                let dir = args.out.join(format!("seed_{seed}"));
                std::thread::spawn(move || {
                    train(&cfg, &dir).map(|_| ()).map_err(|e| (seed, e.to_string()))
                })
            })
            .collect();
        for handle in handles {
            match handle.join() {
                Ok(Ok(())) => {}
                Ok(Err((seed, msg))) => failures.push(format!("seed {seed}: {msg}")),
                Err(_) => failures.push("worker panicked".into()),
            }
        }
    }
    if failures.is_empty() {
        for (seed, _) in &configs {
            println!("wrote {}", args.out.join(format!("seed_{seed}")).display());
        }
        Ok(())
    } else {
        Err(failures.join("; "))
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), String> {
    analyze_runs(&args.runs, args.probe_seed).map_err(|e| e.to_string())?;
    for dir in &args.runs {
        println!("wrote {}", dir.join("properties.csv").display());
    }
    Ok(())
}

fn variant_label(cfg: &TrainConfig) -> String {
    let mut label = format!("{}-{}", cfg.regime.name(), cfg.control_variant.name());
    if cfg.regime != Regime::Baseline {
        let obj = match cfg.leader_objective.kind {
            LeaderObjectiveKind::Msbe => "msbe",
            LeaderObjectiveKind::VarRn => "var-rn",
        };
        label.push('-');
        label.push_str(obj);
    }
    label
}

fn cmd_report(args: &ReportArgs) -> Result<(), String> {
    let mut groups: BTreeMap<String, VariantGroup> = BTreeMap::new();
    let mut env = None;
    for dir in &args.runs {
        let run = load_run(dir).map_err(|e| e.to_string())?;
        env.get_or_insert(run.cfg.env);
        if env != Some(run.cfg.env) {
            return Err("all runs in one report must share an environment".into());
        }
        let label = variant_label(&run.cfg);
        groups
            .entry(label.clone())
            .or_insert_with(|| VariantGroup {
                name: label,
                runs: Vec::new(),
            })
            .runs
            .push(run);
    }
    let env = env.ok_or("no runs given")?;
    let curves = groups
        .values()
        .map(variant_curves)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    std::fs::create_dir_all(&args.out).map_err(|e| e.to_string())?;
    write_report_csv(&args.out.join("report.csv"), &curves, env, &args.thresholds)
        .map_err(|e| e.to_string())?;
    write_significance_csv(&args.out.join("significance.csv"), &curves, 0.05)
        .map_err(|e| e.to_string())?;
    render_curves_svg(&args.out.join("curves.svg"), &curves, env.name())
        .map_err(|e| e.to_string())?;
    for file in ["report.csv", "significance.csv", "curves.svg"] {
        println!("wrote {}", args.out.join(file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Report(args) => cmd_report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
