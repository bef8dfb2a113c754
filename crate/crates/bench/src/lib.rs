//! Benchmark helpers: shared scenario construction for the criterion suites.

use evcon_cli::config::ScenarioFile;
use evcon_core::{Scenario, Strategy};

/// Benchmark scenario truncated to `t_end` seconds under the given strategy.
pub fn scenario(strategy: Strategy, t_end: f64) -> Scenario {
    let mut scenario = ScenarioFile::benchmark()
        .build()
        .expect("shipped preset builds");
    scenario.t_end = t_end;
    scenario.trigger.strategy = strategy;
    scenario
}
