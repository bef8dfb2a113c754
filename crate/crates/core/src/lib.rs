//! Observer-based event-triggered consensus tracking for nonlinear
//! leader-follower multi-agent systems.
//!
//! Followers in semi-strict-feedback form track a leader reference under an
//! adaptive backstepping controller with dynamic-surface filters. Unmeasured
//! states and disturbances are reconstructed by a companion-form state
//! observer and an auxiliary-variable disturbance observer; unknown dynamics
//! are approximated online by Gaussian RBF networks. Controller updates go
//! through one of three event-triggered strategies (fixed, relative, or
//! switch threshold) or a periodic baseline, with a zero-order hold between
//! updates.
//!
//! The [`simulator`] module ties everything into a deterministic fixed-step
//! closed-loop run; the remaining modules are usable on their own.

pub mod controller;
pub mod error;
pub mod expr;
pub mod graph;
pub mod observer;
pub mod plant;
pub mod rbf;
pub mod simulator;
pub mod trigger;

pub use controller::ControllerGains;
pub use error::{Error, Result};
pub use graph::Topology;
pub use observer::{lyapunov_diagnostic, LyapunovSolution, ObserverGains, ObserverState};
pub use plant::{benchmark_dynamics, benchmark_reference, PlantDynamics, ReferenceSignal};
pub use rbf::RbfLayout;
pub use simulator::{
    compare, run, AgentInit, AgentMetrics, ComparisonReport, RbfConfig, RunMetrics, Scenario,
    TrajectoryLog,
};
pub use trigger::{Branch, Strategy, TriggerConfig, TriggerState};
