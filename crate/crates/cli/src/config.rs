//! Scenario files: a strict-schema TOML document mapping onto a core
//! [`Scenario`]. Unknown keys are rejected so a mistyped gain name cannot
//! silently fall back to a default.

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use evcon_core::{
    benchmark_dynamics, benchmark_reference, AgentInit, ControllerGains, ObserverGains,
    PlantDynamics, RbfConfig, ReferenceSignal, Scenario, Strategy, Topology, TriggerConfig,
};

/// The shipped four-follower benchmark preset.
pub const BENCHMARK_PRESET: &str = include_str!("../presets/benchmark.toml");

/// Name accepted by `--scenario` in place of a file path.
pub const BENCHMARK_NAME: &str = "benchmark";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub topology: TopologySection,
    pub plant: PlantSection,
    pub reference: ReferenceSection,
    pub observer: ObserverSection,
    pub controller: ControllerSection,
    #[serde(default)]
    pub rbf: RbfSection,
    pub trigger: TriggerSection,
    pub sim: SimSection,
    #[serde(default)]
    pub output: OutputSection,
    pub agents: Vec<AgentSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    pub adjacency: Vec<Vec<u8>>,
    pub pinning: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Benchmark,
    Custom,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub kind: SourceKind,
    pub drift: Option<Vec<String>>,
    pub disturbance: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub kind: SourceKind,
    pub y_r: Option<String>,
    pub y_r_dot: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverSection {
    pub q: Vec<f64>,
    /// Defaults to 2.0 per level.
    pub kappa: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub r: Vec<f64>,
    pub c: Vec<f64>,
    pub eta: Vec<f64>,
    pub h: Vec<f64>,
    pub m: Vec<f64>,
    pub lambda: f64,
    pub o: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfSection {
    pub range: Option<[f64; 2]>,
    pub nodes_1d: Option<usize>,
    pub nodes_per_axis_2d: Option<usize>,
    pub controller_nodes: Option<usize>,
    pub controller_width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyName {
    Fixed,
    Relative,
    Switch,
    Periodic,
}

impl From<StrategyName> for Strategy {
    fn from(name: StrategyName) -> Strategy {
        match name {
            StrategyName::Fixed => Strategy::Fixed,
            StrategyName::Relative => Strategy::Relative,
            StrategyName::Switch => Strategy::Switch,
            StrategyName::Periodic => Strategy::Periodic,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSection {
    pub strategy: StrategyName,
    pub pi: Option<f64>,
    pub pi_bar: Option<f64>,
    pub mu: Option<f64>,
    pub pi_star: Option<f64>,
    pub pi_bar_star: Option<f64>,
    pub delta: Option<f64>,
    pub gate: Option<f64>,
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub t_end: f64,
    pub dt: f64,
    pub seed: Option<u64>,
    pub bound_ceiling: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<String>,
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSection {
    pub x0: Vec<f64>,
    pub xhat0: Vec<f64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("scenario file does not match the schema")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario file {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn benchmark() -> Self {
        Self::parse(BENCHMARK_PRESET).expect("shipped preset parses")
    }

    /// Builds and validates the runnable scenario.
    pub fn build(&self) -> Result<Scenario> {
        let topology = Topology::new(&self.topology.adjacency, &self.topology.pinning)
            .context("topology")?;

        let plant: Arc<PlantDynamics> = match self.plant.kind {
            SourceKind::Benchmark => {
                if self.plant.drift.is_some() || self.plant.disturbance.is_some() {
                    bail!("plant: drift/disturbance expressions are only valid with kind = \"custom\"");
                }
                Arc::new(benchmark_dynamics())
            }
            SourceKind::Custom => {
                let drift = self
                    .plant
                    .drift
                    .as_ref()
                    .context("plant: custom dynamics need a drift expression list")?;
                let disturbance = self
                    .plant
                    .disturbance
                    .as_ref()
                    .context("plant: custom dynamics need a disturbance expression list")?;
                Arc::new(
                    PlantDynamics::from_expressions(drift, disturbance).context("plant")?,
                )
            }
        };
        let order = plant.order();

        let reference: Arc<ReferenceSignal> = match self.reference.kind {
            SourceKind::Benchmark => {
                if self.reference.y_r.is_some() || self.reference.y_r_dot.is_some() {
                    bail!("reference: y_r expressions are only valid with kind = \"custom\"");
                }
                Arc::new(benchmark_reference())
            }
            SourceKind::Custom => {
                let y_r = self
                    .reference
                    .y_r
                    .as_ref()
                    .context("reference: custom references need y_r")?;
                let y_r_dot = self
                    .reference
                    .y_r_dot
                    .as_ref()
                    .context("reference: custom references need y_r_dot")?;
                let signal =
                    ReferenceSignal::from_expressions(y_r, y_r_dot).context("reference")?;
                signal
                    .check_derivative_consistency(
                        0.0,
                        self.sim.t_end.min(5.0),
                        200,
                        1e-5,
                        1e-6,
                    )
                    .context("reference: y_r_dot disagrees with y_r")?;
                Arc::new(signal)
            }
        };

        let kappa = self
            .observer
            .kappa
            .clone()
            .unwrap_or_else(|| vec![2.0; order]);
        let observer = ObserverGains::new(&self.observer.q, &kappa).context("observer")?;

        let controller = ControllerGains::new(
            self.controller.r.clone(),
            self.controller.c.clone(),
            self.controller.eta.clone(),
            self.controller.h.clone(),
            self.controller.m.clone(),
            self.controller.lambda,
            self.controller.o,
        )
        .context("controller")?;

        let defaults = RbfConfig::default();
        let rbf = RbfConfig {
            range: self
                .rbf
                .range
                .map_or(defaults.range, |[lo, hi]| (lo, hi)),
            nodes_1d: self.rbf.nodes_1d.unwrap_or(defaults.nodes_1d),
            nodes_per_axis_2d: self
                .rbf
                .nodes_per_axis_2d
                .unwrap_or(defaults.nodes_per_axis_2d),
            controller_nodes: self
                .rbf
                .controller_nodes
                .unwrap_or(defaults.controller_nodes),
            controller_width: self
                .rbf
                .controller_width
                .unwrap_or(defaults.controller_width),
            seed: self.sim.seed.unwrap_or(1),
        };

        let trigger = TriggerConfig {
            strategy: self.trigger.strategy.into(),
            pi: self.trigger.pi.unwrap_or(2.5),
            pi_bar: self.trigger.pi_bar.unwrap_or(4.0),
            mu: self.trigger.mu.unwrap_or(5.4),
            pi_star: self.trigger.pi_star.unwrap_or(2.0),
            pi_bar_star: self.trigger.pi_bar_star.unwrap_or(4.0),
            delta: self.trigger.delta.unwrap_or(0.245),
            gate: self.trigger.gate.unwrap_or(6.0),
            period: self.trigger.period.unwrap_or(0.001),
        };

        let init: Vec<AgentInit> = self
            .agents
            .iter()
            .map(|a| AgentInit {
                x0: a.x0.clone(),
                xhat0: a.xhat0.clone(),
            })
            .collect();

        let scenario = Scenario {
            topology,
            plant,
            reference,
            observer,
            controller,
            rbf,
            trigger,
            init,
            t_end: self.sim.t_end,
            dt: self.sim.dt,
            log_stride: self.output.stride.unwrap_or(1),
            bound_ceiling: self.sim.bound_ceiling.unwrap_or(1e3),
        };
        scenario.validate().context("scenario")?;
        Ok(scenario)
    }
}

/// Resolves a `--scenario` argument: the literal name `benchmark` or a path.
pub fn load_scenario_arg(arg: &str) -> Result<ScenarioFile> {
    if arg == BENCHMARK_NAME {
        Ok(ScenarioFile::benchmark())
    } else {
        ScenarioFile::load(Path::new(arg))
    }
}
