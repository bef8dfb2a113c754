//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 configuration error, 2 divergence during
//! simulation, 3 diagnostic failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use evcon_cli::config::{load_scenario_arg, ScenarioFile};
use evcon_cli::{diagnose, output, plot, report};
use evcon_core::{compare, run, Error as CoreError, Scenario, Strategy};

#[derive(Parser)]
#[command(
    name = "evcon",
    version,
    about = "Event-triggered consensus tracking simulator for nonlinear multi-agent systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trajectory/event CSVs, metrics, and plots.
    Run {
        /// Scenario file path, or the name "benchmark".
        #[arg(long)]
        scenario: String,
        /// Override the trigger strategy (fixed, relative, switch, periodic).
        #[arg(long)]
        strategy: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the integration step.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the simulation horizon.
        #[arg(long)]
        horizon: Option<f64>,
        /// Override the layout seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run all four strategies on one scenario and tabulate the comparison.
    Compare {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the observer spectrum, Lyapunov equation, and gain conditions.
    Diagnose {
        #[arg(long)]
        scenario: String,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let divergence = err.downcast_ref::<CoreError>().is_some_and(|core| {
                matches!(
                    core,
                    CoreError::Divergence { .. } | CoreError::NonFinite { .. }
                )
            });
            if divergence {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            strategy,
            out,
            dt,
            horizon,
            seed,
        } => {
            let file = load_scenario_arg(&scenario)?;
            let built = build_with_overrides(&file, strategy.as_deref(), dt, horizon, seed)?;
            let out_dir = out.unwrap_or_else(|| default_out_dir(&file));
            command_run(&built, &out_dir)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            scenario,
            out,
            dt,
            horizon,
            seed,
        } => {
            let file = load_scenario_arg(&scenario)?;
            let built = build_with_overrides(&file, None, dt, horizon, seed)?;
            let out_dir = out.unwrap_or_else(|| default_out_dir(&file));
            command_compare(&built, &out_dir)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose { scenario } => {
            let file = load_scenario_arg(&scenario)?;
            let report = diagnose::diagnose(&file);
            print!("{}", report.render());
            if report.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
    }
}

fn default_out_dir(file: &ScenarioFile) -> PathBuf {
    PathBuf::from(file.output.dir.clone().unwrap_or_else(|| "out".into()))
}

fn build_with_overrides(
    file: &ScenarioFile,
    strategy: Option<&str>,
    dt: Option<f64>,
    horizon: Option<f64>,
    seed: Option<u64>,
) -> Result<Scenario> {
    let mut scenario = file.build()?;
    if let Some(name) = strategy {
        scenario.trigger.strategy =
            Strategy::from_str(name).context("invalid --strategy override")?;
    }
    if let Some(dt) = dt {
        scenario.dt = dt;
    }
    if let Some(horizon) = horizon {
        scenario.t_end = horizon;
    }
    if let Some(seed) = seed {
        scenario.rbf.seed = seed;
    }
    scenario.validate()?;
    for warning in scenario.controller.warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(scenario)
}

fn command_run(scenario: &Scenario, out_dir: &PathBuf) -> Result<()> {
    let (log, metrics) = run(scenario)?;
    let order = scenario.plant.order();
    output::write_run_artifacts(out_dir, scenario.trigger.strategy, order, &log, &metrics)?;
    plot::outputs_vs_reference(&log, scenario, &out_dir.join("outputs.svg"))?;
    plot::tracking_errors(&log, &out_dir.join("tracking_errors.svg"))?;
    for agent in 0..scenario.topology.n_followers() {
        plot::event_intervals(
            &log,
            agent,
            &out_dir.join(format!("intervals_follower_{}.svg", agent + 1)),
        )?;
    }
    print!(
        "{}",
        output::metrics_text(scenario.trigger.strategy, &metrics)
    );
    println!("artifacts written to {}", out_dir.display());
    Ok(())
}

fn command_compare(scenario: &Scenario, out_dir: &PathBuf) -> Result<()> {
    let variants: Vec<Scenario> = [
        Strategy::Fixed,
        Strategy::Switch,
        Strategy::Relative,
        Strategy::Periodic,
    ]
    .into_iter()
    .map(|strategy| scenario.with_trigger(scenario.trigger.with_strategy(strategy)))
    .collect();
    let comparison = compare(&variants)?;
    let text = report::comparison_text(&comparison);
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("comparison.txt"), &text)?;
    std::fs::write(
        out_dir.join("comparison.json"),
        serde_json::to_string_pretty(&report::comparison_json(&comparison))?,
    )?;
    print!("{text}");
    println!("artifacts written to {}", out_dir.display());
    Ok(())
}
