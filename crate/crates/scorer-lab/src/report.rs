//! Run-directory aggregation: loading metrics, smoothing learning curves,
//! probing checkpoints into properties.csv, and emitting report.csv,
//! significance.csv, and a hand-drawn SVG curve plot.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    collect_probe, evaluate_properties, finalize_shared_l_max, random_pairing,
    representation_tap, state_values, write_properties_csv, AnalysisError, PropertyReport,
    DEFAULT_PROBE_SIZE,
};
use crate::checkpoint::{load_entries, restore_section, CheckpointError};
use crate::envs::{derive_seed, EnvKind};
use crate::stats::{
    resample_locf, rolling_mean, steps_to_threshold, summarize, welch_t_test, StatsError,
};
use crate::trainer::{build_nets, TrainConfig};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad config in {path}: {source}")]
    Config {
        path: String,
        source: serde_json::Error,
    },
    #[error("malformed metrics line in {path}: {line}")]
    MalformedMetrics { path: String, line: String },
    #[error("run {0} has no checkpoints")]
    NoCheckpoints(String),
    #[error("run {0} has no episode returns")]
    NoReturns(String),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Mlp(#[from] crate::mlp::MlpError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("variant {0} needs at least 2 seeds for confidence intervals")]
    TooFewSeeds(String),
}

/// One loaded run directory.
#[derive(Debug, Clone)]
pub struct RunData {
    pub dir: PathBuf,
    pub cfg: TrainConfig,
    /// (t_env, episodic return), in completion order.
    pub returns: Vec<(u64, f64)>,
}

pub fn load_metrics_csv(path: &Path) -> Result<Vec<(u64, String, f64)>, ReportError> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let parse = || ReportError::MalformedMetrics {
            path: path.display().to_string(),
            line: line.to_string(),
        };
        let t = parts.next().and_then(|s| s.parse().ok()).ok_or_else(parse)?;
        let kind = parts.next().ok_or_else(parse)?.to_string();
        let v = parts.next().and_then(|s| s.parse().ok()).ok_or_else(parse)?;
        rows.push((t, kind, v));
    }
    Ok(rows)
}

pub fn load_run(dir: &Path) -> Result<RunData, ReportError> {
    let cfg_path = dir.join("config.json");
    let cfg: TrainConfig = serde_json::from_str(&fs::read_to_string(&cfg_path)?).map_err(|e| {
        ReportError::Config {
            path: cfg_path.display().to_string(),
            source: e,
        }
    })?;
    let rows = load_metrics_csv(&dir.join("metrics.csv"))?;
    let returns: Vec<(u64, f64)> = rows
        .into_iter()
        .filter(|(_, k, _)| k == "return")
        .map(|(t, _, v)| (t, v))
        .collect();
    Ok(RunData {
        dir: dir.to_path_buf(),
        cfg,
        returns,
    })
}

/// Appendix-style smoothing window in env steps.
pub fn smoothing_window_steps(env: EnvKind) -> u64 {
    if env.is_minatar() {
        10_000
    } else {
        100
    }
}

/// Resamples episode returns onto a uniform grid (last observation carried
/// forward) and applies the trailing rolling mean over the window.
pub fn smoothed_curve(
    returns: &[(u64, f64)],
    total_steps: u64,
    window_steps: u64,
) -> Result<Vec<(u64, f64)>, ReportError> {
    if returns.is_empty() {
        return Err(ReportError::NoReturns("<series>".into()));
    }
    // Ten grid points per smoothing window.
    let grid_step = (window_steps / 10).max(1);
    let grid: Vec<u64> = (1..=total_steps / grid_step).map(|i| i * grid_step).collect();
    let resampled = resample_locf(returns, &grid);
    let window = (window_steps / grid_step).max(1) as usize;
    let smoothed = rolling_mean(&resampled, window)?;
    Ok(grid.into_iter().zip(smoothed).collect())
}

/// Runs of one experimental variant (same env/regime/objective, different
/// seeds).
#[derive(Debug, Clone)]
pub struct VariantGroup {
    pub name: String,
    pub runs: Vec<RunData>,
}

#[derive(Debug, Clone)]
pub struct VariantCurves {
    pub name: String,
    pub grid: Vec<u64>,
    pub mean: Vec<f64>,
    pub ci_half_width: Vec<f64>,
    /// Per-seed maximum of the smoothed curve.
    pub max_smoothed: Vec<f64>,
    /// Final smoothed value per seed.
    pub final_smoothed: Vec<f64>,
}

pub fn variant_curves(group: &VariantGroup) -> Result<VariantCurves, ReportError> {
    if group.runs.len() < 2 {
        return Err(ReportError::TooFewSeeds(group.name.clone()));
    }
    let cfg = &group.runs[0].cfg;
    let window = smoothing_window_steps(cfg.env);
    let mut per_seed: Vec<Vec<f64>> = Vec::new();
    let mut grid: Vec<u64> = Vec::new();
    for run in &group.runs {
        if run.returns.is_empty() {
            return Err(ReportError::NoReturns(run.dir.display().to_string()));
        }
        let curve = smoothed_curve(&run.returns, cfg.total_timesteps, window)?;
        if grid.is_empty() {
            grid = curve.iter().map(|&(t, _)| t).collect();
        }
        per_seed.push(curve.into_iter().map(|(_, v)| v).collect());
    }
    let n = per_seed.len() as f64;
    let mut mean = Vec::with_capacity(grid.len());
    let mut ci = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let column: Vec<f64> = per_seed.iter().map(|s| s[k]).collect();
        let m = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
        mean.push(m);
        ci.push(1.96 * var.sqrt() / n.sqrt());
    }
    let max_smoothed = per_seed
        .iter()
        .map(|s| s.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let final_smoothed = per_seed.iter().map(|s| *s.last().unwrap()).collect();
    Ok(VariantCurves {
        name: group.name.clone(),
        grid,
        mean,
        ci_half_width: ci,
        max_smoothed,
        final_smoothed,
    })
}

/// report.csv: per variant the cross-seed summary of maximum smoothed
/// returns plus steps-to-threshold columns on the mean curve.
pub fn write_report_csv(
    path: &Path,
    curves: &[VariantCurves],
    env: EnvKind,
    thresholds: &[f64],
) -> Result<(), ReportError> {
    let mut out = String::from("env,variant,n_seeds,mean_max_return,ci95,iqm,iqm_ci95,final_mean");
    for th in thresholds {
        out.push_str(&format!(",steps_to_{th}"));
    }
    out.push('\n');
    for c in curves {
        let s = summarize(&c.max_smoothed).or_else(|_| {
            // Fewer than 4 seeds: no trim is possible, IQM degenerates to
            // the mean.
            let (m, hw) = crate::stats::normal_ci(&c.max_smoothed)?;
            Ok::<_, StatsError>(crate::stats::StatSummary {
                mean: m,
                ci_half_width: hw,
                iqm: m,
                iqm_ci_half_width: hw,
                n: c.max_smoothed.len(),
            })
        })?;
        let final_mean = c.final_smoothed.iter().sum::<f64>() / c.final_smoothed.len() as f64;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{final_mean}",
            env.name(),
            c.name,
            s.n,
            s.mean,
            s.ci_half_width,
            s.iqm,
            s.iqm_ci_half_width
        ));
        let mean_curve: Vec<(u64, f64)> = c.grid.iter().cloned().zip(c.mean.iter().cloned()).collect();
        for &th in thresholds {
            match steps_to_threshold(&mean_curve, th) {
                Some(t) => out.push_str(&format!(",{t}")),
                None => out.push_str(",NA"),
            }
        }
        out.push('\n');
    }
    fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

/// significance.csv: pairwise Welch tests over per-seed maximum smoothed
/// returns; `not_worse` marks p >= alpha or a mean advantage.
pub fn write_significance_csv(
    path: &Path,
    curves: &[VariantCurves],
    alpha: f64,
) -> Result<(), ReportError> {
    let mut out = String::from("variant_a,variant_b,t,df,p_two_sided,a_not_worse_than_b\n");
    for a in curves {
        for b in curves {
            if a.name == b.name {
                continue;
            }
            let r = welch_t_test(&a.max_smoothed, &b.max_smoothed)?;
            let mean_a = a.max_smoothed.iter().sum::<f64>() / a.max_smoothed.len() as f64;
            let mean_b = b.max_smoothed.iter().sum::<f64>() / b.max_smoothed.len() as f64;
            let not_worse = r.p_two_sided >= alpha || mean_a >= mean_b;
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                a.name, b.name, r.t, r.df, r.p_two_sided, not_worse
            ));
        }
    }
    fs::File::create(path)?.write_all(out.as_bytes())?;
    Ok(())
}

const SVG_COLORS: [&str; 6] = [
    "#2e7d32", "#c62828", "#6a1b9a", "#1565c0", "#ef6c00", "#00838f",
];

/// Hand-emitted SVG: one polyline per variant mean with a translucent CI
/// band, axes with min/max tick labels, and a legend.
pub fn render_curves_svg(path: &Path, curves: &[VariantCurves], title: &str) -> Result<(), ReportError> {
    let (w, h) = (860.0, 520.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let plot_w = w - ml - mr;
    let plot_h = h - mt - mb;

    let x_max = curves
        .iter()
        .flat_map(|c| c.grid.last().cloned())
        .max()
        .unwrap_or(1) as f64;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for c in curves {
        for (m, ci) in c.mean.iter().zip(&c.ci_half_width) {
            y_min = y_min.min(m - ci);
            y_max = y_max.max(m + ci);
        }
    }
    if !y_min.is_finite() || y_min == y_max {
        y_min = 0.0;
        y_max = 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    let x_of = |t: f64| ml + plot_w * t / x_max;
    let y_of = |v: f64| mt + plot_h * (1.0 - (v - y_min) / (y_max - y_min));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{title}</text>\n",
        w / 2.0
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + plot_h,
        ml + plot_w,
        mt + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        mt + plot_h
    ));
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let t = x_max * frac;
        let x = x_of(t);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            mt + plot_h,
            mt + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{:.0}</text>\n",
            mt + plot_h + 20.0,
            t
        ));
        let v = y_min + (y_max - y_min) * frac;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{ml}\" y2=\"{y}\" stroke=\"black\"/>\n",
            ml - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{v:.1}</text>\n",
            ml - 9.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">env steps</text>\n",
        ml + plot_w / 2.0,
        h - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">smoothed return</text>\n",
        mt + plot_h / 2.0,
        mt + plot_h / 2.0
    ));

    for (ci_idx, c) in curves.iter().enumerate() {
        let color = SVG_COLORS[ci_idx % SVG_COLORS.len()];
        // CI band polygon: upper edge forward, lower edge backward.
        let mut band = String::from("<polygon points=\"");
        for (k, &t) in c.grid.iter().enumerate() {
            band.push_str(&format!(
                "{:.2},{:.2} ",
                x_of(t as f64),
                y_of(c.mean[k] + c.ci_half_width[k])
            ));
        }
        for (k, &t) in c.grid.iter().enumerate().rev() {
            band.push_str(&format!(
                "{:.2},{:.2} ",
                x_of(t as f64),
                y_of(c.mean[k] - c.ci_half_width[k])
            ));
        }
        band.push_str(&format!("\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"));
        svg.push_str(&band);

        let mut line = String::from("<polyline points=\"");
        for (k, &t) in c.grid.iter().enumerate() {
            line.push_str(&format!("{:.2},{:.2} ", x_of(t as f64), y_of(c.mean[k])));
        }
        line.push_str(&format!(
            "\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
        ));
        svg.push_str(&line);

        let ly = mt + 16.0 * ci_idx as f64 + 8.0;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"12\" height=\"4\" fill=\"{color}\"/>\n",
            ml + 10.0,
            ly
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            ml + 28.0,
            ly + 6.0,
            c.name
        ));
    }
    svg.push_str("</svg>\n");
    fs::File::create(path)?.write_all(svg.as_bytes())?;
    Ok(())
}

/// Checkpoint files of a run, sorted by training step.
pub fn list_checkpoints(dir: &Path) -> Result<Vec<(u64, PathBuf)>, ReportError> {
    let ckpt_dir = dir.join("checkpoints");
    let mut out = Vec::new();
    if ckpt_dir.is_dir() {
        for entry in fs::read_dir(&ckpt_dir)? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if let Some(step) = name
                .strip_prefix("step_")
                .and_then(|s| s.strip_suffix(".bin"))
                .and_then(|s| s.parse().ok())
            {
                out.push((step, path));
            }
        }
    }
    if out.is_empty() {
        return Err(ReportError::NoCheckpoints(dir.display().to_string()));
    }
    out.sort_by_key(|&(step, _)| step);
    Ok(out)
}

/// Probes every checkpoint of every run and writes a properties.csv per
/// run. CR columns are finalized with the L_max shared across the whole
/// listed group.
pub fn analyze_runs(dirs: &[PathBuf], probe_seed: u64) -> Result<(), ReportError> {
    let mut all_reports: Vec<Vec<PropertyReport>> = Vec::new();
    let mut probe_cache: Option<(EnvKind, crate::analysis::ProbeDataset)> = None;
    for dir in dirs {
        let run = load_run(dir)?;
        let cfg = &run.cfg;
        let probe = match &probe_cache {
            Some((kind, p)) if *kind == cfg.env => p.clone(),
            _ => {
                let p = collect_probe(cfg.env, probe_seed, DEFAULT_PROBE_SIZE);
                probe_cache = Some((cfg.env, p.clone()));
                p
            }
        };
        let states = probe.states();
        let next_states = probe.next_states();
        let rand_idx = random_pairing(probe.len(), derive_seed(probe_seed, 7));
        let mut reports = Vec::new();
        let mut l_max = 0.0;
        for (step, ckpt) in list_checkpoints(dir)? {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            let (mut phi, mut theta) = build_nets(cfg, &mut rng);
            let entries = load_entries(&ckpt)?;
            restore_section(&entries, "phi", &mut phi.params)?;
            let mut merged = theta.as_single_paramset();
            restore_section(&entries, "theta", &mut merged)?;
            theta.restore_from_single_paramset(&merged);

            let z = representation_tap(&phi, &theta, cfg.regime, &states)?;
            let z_next = representation_tap(&phi, &theta, cfg.regime, &next_states)?;
            let v = state_values(&phi, &theta, &states)?;
            let report = evaluate_properties(step, &z, &z_next, &v, &rand_idx, l_max)?;
            l_max = report.l_max_running;
            reports.push(report);
        }
        all_reports.push(reports);
    }
    finalize_shared_l_max(&mut all_reports);
    for (dir, reports) in dirs.iter().zip(&all_reports) {
        write_properties_csv(&dir.join("properties.csv"), reports)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::LeaderObjectiveSpec;
    use crate::trainer::{train, ControlVariant, Regime};

    fn quick_cfg(seed: u64, regime: Regime) -> TrainConfig {
        TrainConfig {
            env: EnvKind::CartPole,
            regime,
            control_variant: ControlVariant::Dqn,
            leader_objective: LeaderObjectiveSpec::msbe(),
            seed,
            total_timesteps: 400,
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
            eps_anneal_steps: 300,
            batch_size: 16,
            buffer_size: 500,
            num_envs: 2,
            latent_dim: 8,
            q_hidden_dim: 8,
            value_hidden_dim: 8,
            advantage_hidden_dim: 8,
            log_every: 100,
            checkpoint_every: Some(200),
        }
    }

    #[test]
    fn smoothing_grid_and_window() {
        let returns: Vec<(u64, f64)> = (1..=100).map(|i| (i * 10, i as f64)).collect();
        let curve = smoothed_curve(&returns, 1000, 100).unwrap();
        assert_eq!(curve.len(), 100);
        assert_eq!(curve[0].0, 10);
        assert_eq!(curve.last().unwrap().0, 1000);
        // Trailing mean of a linear ramp lags below the raw values.
        assert!(curve.last().unwrap().1 < 100.0);
        assert!(curve.last().unwrap().1 > 90.0);
    }

    #[test]
    fn metrics_round_trip_through_loader() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick_cfg(1, Regime::Scorer);
        let out = dir.path().join("run");
        train(&cfg, &out).unwrap();
        let run = load_run(&out).unwrap();
        assert_eq!(run.cfg.seed, 1);
        assert!(!run.returns.is_empty(), "CartPole episodes complete fast");
        for w in run.returns.windows(2) {
            assert!(w[1].0 > w[0].0);
        }
    }

    #[test]
    fn report_and_significance_and_svg_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut groups = Vec::new();
        for (regime, name) in [(Regime::Baseline, "baseline"), (Regime::Scorer, "scorer")] {
            let mut runs = Vec::new();
            for seed in 0..2 {
                let cfg = quick_cfg(seed, regime);
                let out = dir.path().join(format!("{name}-{seed}"));
                train(&cfg, &out).unwrap();
                runs.push(load_run(&out).unwrap());
            }
            groups.push(VariantGroup {
                name: name.to_string(),
                runs,
            });
        }
        let curves: Vec<VariantCurves> =
            groups.iter().map(|g| variant_curves(g).unwrap()).collect();
        let report_path = dir.path().join("report.csv");
        write_report_csv(&report_path, &curves, EnvKind::CartPole, &[5.0, 1e9]).unwrap();
        let text = fs::read_to_string(&report_path).unwrap();
        assert!(text.contains("steps_to_5"));
        assert!(text.lines().count() >= 3);
        assert!(text.contains(",NA"), "unreachable threshold reports NA");

        let sig_path = dir.path().join("significance.csv");
        write_significance_csv(&sig_path, &curves, 0.05).unwrap();
        let sig = fs::read_to_string(&sig_path).unwrap();
        assert!(sig.contains("baseline,scorer"));
        assert!(sig.contains("scorer,baseline"));

        let svg_path = dir.path().join("curves.svg");
        render_curves_svg(&svg_path, &curves, "cartpole").unwrap();
        let svg_a = fs::read(&svg_path).unwrap();
        render_curves_svg(&svg_path, &curves, "cartpole").unwrap();
        assert_eq!(svg_a, fs::read(&svg_path).unwrap());
        let svg_text = String::from_utf8(svg_a).unwrap();
        assert!(svg_text.starts_with("<svg"));
        assert!(svg_text.contains("<polyline"));
        assert!(svg_text.contains("<polygon"));
    }

    #[test]
    fn identical_variants_are_mutually_not_worse() {
        let curves = vec![
            VariantCurves {
                name: "a".into(),
                grid: vec![1, 2],
                mean: vec![1.0, 2.0],
                ci_half_width: vec![0.0, 0.0],
                max_smoothed: vec![1.0, 2.0, 3.0],
                final_smoothed: vec![1.0, 2.0, 3.0],
            },
            VariantCurves {
                name: "b".into(),
                grid: vec![1, 2],
                mean: vec![1.0, 2.0],
                ci_half_width: vec![0.0, 0.0],
                max_smoothed: vec![1.0, 2.0, 3.0],
                final_smoothed: vec![1.0, 2.0, 3.0],
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.csv");
        write_significance_csv(&path, &curves, 0.05).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        for line in text.lines().skip(1) {
            assert!(line.ends_with(",true"));
            assert!(line.contains(",1,"), "p = 1 for identical samples");
        }
    }

    #[test]
    fn single_seed_group_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = quick_cfg(0, Regime::Baseline);
        let out = dir.path().join("solo");
        train(&cfg, &out).unwrap();
        let group = VariantGroup {
            name: "solo".into(),
            runs: vec![load_run(&out).unwrap()],
        };
        assert!(matches!(
            variant_curves(&group),
            Err(ReportError::TooFewSeeds(_))
        ));
    }

    #[test]
    fn analyze_writes_properties_with_shared_l_max() {
        let dir = tempfile::tempdir().unwrap();
        let mut run_dirs = Vec::new();
        for (seed, regime) in [(0, Regime::Baseline), (1, Regime::Scorer)] {
            let cfg = quick_cfg(seed, regime);
            let out = dir.path().join(format!("r{seed}"));
            train(&cfg, &out).unwrap();
            run_dirs.push(out);
        }
        analyze_runs(&run_dirs, 42).unwrap();
        let mut final_cols = Vec::new();
        for d in &run_dirs {
            let text = fs::read_to_string(d.join("properties.csv")).unwrap();
            let lines: Vec<&str> = text.lines().collect();
            assert!(lines.len() >= 2, "checkpoint rows present");
            assert_eq!(
                lines[0],
                "t_env,l_rep,cr,dyn_aware,diversity,orthogonality,sparsity"
            );
            for line in &lines[1..] {
                let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
                // l_rep and shared l_max reconstruct cr.
                final_cols.push((cols[1], cols[2]));
            }
        }
        // Shared L_max: the largest l_rep across BOTH runs has cr at the
        // shared minimum.
        let max_l_rep = final_cols.iter().map(|c| c.0).fold(f64::MIN, f64::max);
        for (l_rep, cr) in final_cols {
            let expect = 1.0 - l_rep / (max_l_rep + crate::analysis::EPS_DIV);
            assert!((cr - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_checkpoints_is_an_explicit_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = quick_cfg(0, Regime::Baseline);
        cfg.checkpoint_every = None;
        let out = dir.path().join("run");
        train(&cfg, &out).unwrap();
        fs::remove_dir_all(out.join("checkpoints")).unwrap();
        assert!(matches!(
            analyze_runs(&[out], 1),
            Err(ReportError::NoCheckpoints(_))
        ));
    }
}
