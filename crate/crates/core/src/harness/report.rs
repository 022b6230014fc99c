use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::level_io::serialize_xsb;

use super::{ExperimentConfig, HarnessError, MetricsRow, RunResult};

pub const METRICS_HEADER: &str = "seed,env_steps,solved_ratio,mean_return,mean_ep_len,wall_clock_sec,shaped";

/// Hex SHA-256 over every setting that influences a run, including the
/// levels themselves. Seeds and the checkpoint directory are excluded.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let h = &config.hyper;
    let mut text = String::new();
    let _ = writeln!(text, "shaping={}", config.shaping.enabled);
    let _ = writeln!(text, "heuristic={}", config.shaping.heuristic_mode.name());
    let _ = writeln!(text, "gamma_in_potential={}", config.shaping.gamma_in_potential);
    let _ = writeln!(text, "learning_rate={:?}", h.learning_rate);
    let _ = writeln!(text, "gamma={:?}", h.gamma);
    let _ = writeln!(text, "entropy_coef={:?}", h.entropy_coef);
    let _ = writeln!(text, "value_loss_coef={:?}", h.value_loss_coef);
    let _ = writeln!(text, "rmsprop_eps={:?}", h.rmsprop_eps);
    let _ = writeln!(text, "rmsprop_alpha={:?}", h.rmsprop_alpha);
    let _ = writeln!(text, "rollout_len={}", h.rollout_len);
    let _ = writeln!(text, "n_envs={}", h.n_envs);
    let _ = writeln!(text, "max_grad_norm={:?}", h.max_grad_norm);
    let _ = writeln!(text, "total_env_steps={}", config.total_env_steps);
    let _ = writeln!(text, "eval_every={}", config.eval_every);
    let _ = writeln!(text, "eval_instances={}", config.eval_instances);
    let _ = writeln!(text, "step_cap={}", config.step_cap);
    let _ = writeln!(text, "encoding={:?}", config.encoding);
    let _ = writeln!(text, "planner_budget={:?}", config.planner_budget);
    for level in &config.level_set.levels {
        text.push_str(&serialize_xsb(level));
        text.push('\n');
    }
    sha256_hex(&text)
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn reproducibility_line(config: &ExperimentConfig, seed: u64) -> String {
    format!(
        "# sokoshape {} config={} seed={seed}",
        env!("CARGO_PKG_VERSION"),
        config_hash(config)
    )
}

/// One run's metrics as CSV text, preceded by a reproducibility comment.
pub fn metrics_csv(config: &ExperimentConfig, seed: u64, rows: &[MetricsRow]) -> String {
    let mut out = reproducibility_line(config, seed);
    out.push('\n');
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.3},{}",
            r.seed, r.env_steps, r.solved_ratio, r.mean_return, r.mean_ep_len, r.wall_clock_sec, r.shaped
        );
    }
    out
}

pub fn write_metrics_csv(path: &Path, config: &ExperimentConfig, seed: u64, rows: &[MetricsRow]) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, metrics_csv(config, seed, rows)).map_err(io)
}

/// Parses a metrics CSV written by [`write_metrics_csv`]; comment lines are skipped.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    let bad = |line: usize, what: &str| {
        HarnessError::Validation(format!("{}:{line}: {what}", path.display()))
    };
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !seen_header {
            if line != METRICS_HEADER {
                return Err(bad(i + 1, "unexpected header"));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(i + 1, "expected 7 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
        rows.push(MetricsRow {
            seed: f[0].parse().map_err(|_| bad(i + 1, "bad seed"))?,
            env_steps: f[1].parse().map_err(|_| bad(i + 1, "bad env_steps"))?,
            solved_ratio: num(f[2])?,
            mean_return: num(f[3])?,
            mean_ep_len: num(f[4])?,
            wall_clock_sec: num(f[5])?,
            shaped: f[6].parse().map_err(|_| bad(i + 1, "bad shaped flag"))?,
        });
    }
    Ok(rows)
}

/// JSON report with the final row of every seed.
pub fn summary_report(config: &ExperimentConfig, results: &[RunResult]) -> String {
    let runs: Vec<serde_json::Value> = results
        .iter()
        .map(|r| {
            let last = r.final_row();
            serde_json::json!({
                "seed": r.seed,
                "updates": r.updates,
                "env_steps": last.map(|l| l.env_steps),
                "solved_ratio": last.map(|l| l.solved_ratio),
                "mean_return": last.map(|l| l.mean_return),
                "mean_ep_len": last.map(|l| l.mean_ep_len),
                "first_step_at_0.9": r.first_crossing(0.9),
                "cache_hits": r.cache_hits,
                "cache_misses": r.cache_misses,
            })
        })
        .collect();
    let finals: Vec<f64> = results.iter().filter_map(|r| r.final_row()).map(|r| r.solved_ratio).collect();
    let mean = if finals.is_empty() { 0.0 } else { finals.iter().sum::<f64>() / finals.len() as f64 };
    let doc = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": config_hash(config),
        "shaped": config.shaping.enabled,
        "mean_final_solved_ratio": mean,
        "runs": runs,
    });
    serde_json::to_string_pretty(&doc).expect("plain values serialize") + "\n"
}
