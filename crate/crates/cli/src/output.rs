//! On-disk artifacts of a run: trajectory and event CSVs, a flat key-value
//! metrics block, and machine-readable JSON summaries.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing
//! a written file recovers the exact bit patterns.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;

use evcon_core::{RunMetrics, Strategy, TrajectoryLog};

/// Column layout: time, then per agent `i` (1-based): `x_i_1..n`,
/// `xhat_i_1..n`, `varpihat_i_1..n`, `z_i_1..n`, `u_i`, `w_i`, `theta_i`,
/// `wnorm_i_1..n`.
pub fn trajectory_csv(log: &TrajectoryLog, order: usize) -> String {
    let mut out = String::new();
    out.push_str("time");
    for i in 1..=log.agents.len() {
        for group in ["x", "xhat", "varpihat", "z"] {
            for level in 1..=order {
                let _ = write!(out, ",{group}_{i}_{level}");
            }
        }
        let _ = write!(out, ",u_{i},w_{i},theta_{i}");
        for level in 1..=order {
            let _ = write!(out, ",wnorm_{i}_{level}");
        }
    }
    out.push('\n');
    for (idx, &t) in log.times.iter().enumerate() {
        let _ = write!(out, "{t}");
        for series in &log.agents {
            for group in [&series.x, &series.x_hat, &series.varpi_hat, &series.z] {
                for level in group {
                    let _ = write!(out, ",{}", level[idx]);
                }
            }
            let _ = write!(out, ",{},{},{}", series.u[idx], series.w[idx], series.theta[idx]);
            for level in &series.w_norm {
                let _ = write!(out, ",{}", level[idx]);
            }
        }
        out.push('\n');
    }
    out
}

/// Columns: time, agent (1-based), branch, u.
pub fn events_csv(log: &TrajectoryLog) -> String {
    let mut out = String::from("time,agent,branch,u\n");
    for event in &log.events {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            event.time,
            event.agent + 1,
            event.branch,
            event.u
        );
    }
    out
}

/// Parses a trajectory CSV back into its header and numeric rows.
pub fn parse_trajectory_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .context("empty csv")?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|field| {
                field
                    .parse::<f64>()
                    .with_context(|| format!("line {}: bad float '{field}'", lineno + 2))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn metrics_text(strategy: Strategy, metrics: &RunMetrics) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "strategy = {strategy}");
    let _ = writeln!(out, "diverged = {}", metrics.diverged);
    let _ = writeln!(out, "bounds_ok = {}", metrics.bounds_ok);
    let _ = writeln!(out, "bound_ceiling = {}", metrics.bound_ceiling);
    let _ = writeln!(out, "max_abs_z = {}", metrics.max_abs_z);
    let _ = writeln!(out, "max_psi_norm = {}", metrics.max_psi_norm);
    let _ = writeln!(out, "max_abs_theta = {}", metrics.max_abs_theta);
    let _ = writeln!(out, "max_w_hat_norm = {}", metrics.max_w_hat_norm);
    for (i, a) in metrics.agents.iter().enumerate() {
        let tag = format!("agent_{}", i + 1);
        let _ = writeln!(out, "{tag}.events_total = {}", a.events_total);
        let _ = writeln!(out, "{tag}.events_fixed_branch = {}", a.events_fixed_branch);
        let _ = writeln!(
            out,
            "{tag}.events_relative_branch = {}",
            a.events_relative_branch
        );
        let _ = writeln!(
            out,
            "{tag}.min_interval = {}",
            a.min_interval.map_or("n/a".into(), |v| v.to_string())
        );
        let _ = writeln!(
            out,
            "{tag}.mean_interval = {}",
            a.mean_interval.map_or("n/a".into(), |v| v.to_string())
        );
        let _ = writeln!(out, "{tag}.early_rms_z1 = {}", a.early_rms_z1);
        let _ = writeln!(out, "{tag}.tail_rms_z1 = {}", a.tail_rms_z1);
        let _ = writeln!(out, "{tag}.tail_max_z1 = {}", a.tail_max_z1);
        let _ = writeln!(out, "{tag}.max_w_rate = {}", a.max_w_rate);
        let _ = writeln!(
            out,
            "{tag}.zeno_bound = {}",
            a.zeno_bound.map_or("n/a".into(), |v| v.to_string())
        );
    }
    out
}

pub fn metrics_json(strategy: Strategy, metrics: &RunMetrics) -> serde_json::Value {
    json!({
        "strategy": strategy.to_string(),
        "diverged": metrics.diverged,
        "bounds_ok": metrics.bounds_ok,
        "bound_ceiling": metrics.bound_ceiling,
        "max_abs_z": metrics.max_abs_z,
        "max_psi_norm": metrics.max_psi_norm,
        "max_abs_theta": metrics.max_abs_theta,
        "max_w_hat_norm": metrics.max_w_hat_norm,
        "agents": metrics.agents.iter().enumerate().map(|(i, a)| json!({
            "agent": i + 1,
            "events_total": a.events_total,
            "events_fixed_branch": a.events_fixed_branch,
            "events_relative_branch": a.events_relative_branch,
            "min_interval": a.min_interval,
            "mean_interval": a.mean_interval,
            "early_rms_z1": a.early_rms_z1,
            "tail_rms_z1": a.tail_rms_z1,
            "tail_max_z1": a.tail_max_z1,
            "max_w_rate": a.max_w_rate,
            "zeno_bound": a.zeno_bound,
        })).collect::<Vec<_>>(),
    })
}

pub fn write_run_artifacts(
    dir: &Path,
    strategy: Strategy,
    order: usize,
    log: &TrajectoryLog,
    metrics: &RunMetrics,
) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    fs::write(dir.join("trajectory.csv"), trajectory_csv(log, order))?;
    fs::write(dir.join("events.csv"), events_csv(log))?;
    fs::write(dir.join("metrics.txt"), metrics_text(strategy, metrics))?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&metrics_json(strategy, metrics))?,
    )?;
    Ok(())
}
