//! Event-triggered controller-update strategies and the zero-order hold.
//!
//! Between events the actuator holds the last transmitted value; an event
//! fires when the gap between the current candidate signal and the held value
//! crosses the strategy's threshold. The fixed strategy uses a constant
//! threshold, the relative strategy scales its threshold with the held
//! control magnitude, and the switch strategy picks between the two based on
//! a gate on the held magnitude. A periodic baseline updates on a fixed
//! schedule regardless of the gap.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Fixed,
    Relative,
    Switch,
    Periodic,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Fixed,
        Strategy::Relative,
        Strategy::Switch,
        Strategy::Periodic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Fixed => "fixed",
            Strategy::Relative => "relative",
            Strategy::Switch => "switch",
            Strategy::Periodic => "periodic",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Strategy::Fixed),
            "relative" => Ok(Strategy::Relative),
            "switch" => Ok(Strategy::Switch),
            "periodic" => Ok(Strategy::Periodic),
            other => Err(Error::UnknownStrategy(other.to_string())),
        }
    }
}

/// Thresholds and shaping parameters for every strategy. A config always
/// carries the full set so one scenario can be re-run under each strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerConfig {
    pub strategy: Strategy,
    /// Fixed firing threshold.
    pub pi: f64,
    /// Fixed-candidate compensation magnitude; must exceed `pi`.
    pub pi_bar: f64,
    /// Smoothing width of the tanh compensation terms.
    pub mu: f64,
    /// Relative threshold slope in (0, 1).
    pub delta: f64,
    /// Relative firing offset.
    pub pi_star: f64,
    /// Relative-candidate compensation magnitude; must exceed
    /// `pi_star / (1 - delta)`.
    pub pi_bar_star: f64,
    /// Switch gate on the held control magnitude.
    pub gate: f64,
    /// Update period of the periodic baseline.
    pub period: f64,
}

impl TriggerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("pi", self.pi),
            ("pi_bar", self.pi_bar),
            ("mu", self.mu),
            ("pi_star", self.pi_star),
            ("pi_bar_star", self.pi_bar_star),
            ("gate", self.gate),
            ("period", self.period),
        ] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Parameter {
                    name: match name {
                        "pi" => "pi",
                        "pi_bar" => "pi_bar",
                        "mu" => "mu",
                        "pi_star" => "pi_star",
                        "pi_bar_star" => "pi_bar_star",
                        "gate" => "gate",
                        _ => "period",
                    },
                    constraint: "> 0",
                    value,
                });
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Parameter {
                name: "delta",
                constraint: "in (0, 1)",
                value: self.delta,
            });
        }
        if !(self.pi_bar > self.pi) {
            return Err(Error::Parameter {
                name: "pi_bar",
                constraint: "> pi",
                value: self.pi_bar,
            });
        }
        if !(self.pi_bar_star > self.pi_star / (1.0 - self.delta)) {
            return Err(Error::Parameter {
                name: "pi_bar_star",
                constraint: "> pi_star / (1 - delta)",
                value: self.pi_bar_star,
            });
        }
        Ok(())
    }

    /// Smallest threshold the active strategy can ever apply; the
    /// inter-event-time lower bound divides this by the peak candidate slope.
    /// The periodic baseline has no threshold.
    pub fn threshold_floor(&self) -> Option<f64> {
        match self.strategy {
            Strategy::Fixed => Some(self.pi),
            Strategy::Relative => Some(self.pi_star),
            Strategy::Switch => Some(self.pi.min(self.pi_star)),
            Strategy::Periodic => None,
        }
    }

    pub fn with_strategy(&self, strategy: Strategy) -> Self {
        Self { strategy, ..self.clone() }
    }
}

/// Which threshold branch produced an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Fixed,
    Relative,
    Periodic,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Fixed => "fixed",
            Branch::Relative => "relative",
            Branch::Periodic => "periodic",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One controller update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub branch: Branch,
    pub u: f64,
}

/// Zero-order-hold state of one agent's actuator plus its event history.
#[derive(Debug, Clone, Default)]
pub struct TriggerState {
    /// Held control value; changes only at event times.
    pub u_applied: f64,
    /// Most recent candidate signal.
    pub w_current: f64,
    pub last_event_time: Option<f64>,
    pub count_fixed_branch: usize,
    pub count_relative_branch: usize,
    pub events: Vec<Event>,
}

impl TriggerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total_events(&self) -> usize {
        self.events.len()
    }
}

/// Candidate under the fixed strategy: the control law minus a smooth
/// compensation of magnitude `pi_bar`.
pub fn candidate_fixed(cfg: &TriggerConfig, alpha_final: f64, z_n: f64) -> f64 {
    alpha_final - cfg.pi_bar * (z_n * cfg.pi_bar / cfg.mu).tanh()
}

/// Candidate under the relative strategy. Always opposes the surface error:
/// `z_n * w <= 0`.
pub fn candidate_relative(cfg: &TriggerConfig, alpha_final: f64, z_n: f64) -> f64 {
    -(1.0 + cfg.delta)
        * (alpha_final * (z_n * alpha_final / cfg.mu).tanh()
            + cfg.pi_bar_star * (z_n * cfg.pi_bar_star / cfg.mu).tanh())
}

/// Candidate signal and active branch for the configured strategy.
///
/// The switch strategy transmits the relative-form candidate and only its
/// threshold test switches: a candidate that jumped between the two law
/// shapes at every gate crossing would re-fire immediately after each
/// branch change and the hold would degenerate to near-periodic updates.
/// The branch reports which threshold test is in force, from the held
/// control magnitude against the gate. The periodic baseline transmits
/// the raw control law.
pub fn candidate(
    cfg: &TriggerConfig,
    state: &TriggerState,
    alpha_final: f64,
    z_n: f64,
) -> (f64, Branch) {
    match cfg.strategy {
        Strategy::Fixed => (candidate_fixed(cfg, alpha_final, z_n), Branch::Fixed),
        Strategy::Relative => (candidate_relative(cfg, alpha_final, z_n), Branch::Relative),
        Strategy::Switch => {
            let branch = if state.u_applied.abs() >= cfg.gate {
                Branch::Relative
            } else {
                Branch::Fixed
            };
            (candidate_relative(cfg, alpha_final, z_n), branch)
        }
        Strategy::Periodic => (alpha_final, Branch::Periodic),
    }
}

/// Trigger test at time `t`. `grid_tol` absorbs floating-point jitter when the
/// periodic schedule is compared on the integration grid (half a step is the
/// intended value); threshold branches ignore it.
pub fn should_fire(
    cfg: &TriggerConfig,
    state: &TriggerState,
    w_now: f64,
    t: f64,
    grid_tol: f64,
) -> Option<Branch> {
    let last = match state.last_event_time {
        // Nothing transmitted yet; fire to initialize the hold.
        None => {
            return Some(match cfg.strategy {
                Strategy::Fixed => Branch::Fixed,
                Strategy::Relative => Branch::Relative,
                Strategy::Switch => {
                    if state.u_applied.abs() >= cfg.gate {
                        Branch::Relative
                    } else {
                        Branch::Fixed
                    }
                }
                Strategy::Periodic => Branch::Periodic,
            })
        }
        Some(ts) => ts,
    };
    let gap = (w_now - state.u_applied).abs();
    match cfg.strategy {
        Strategy::Fixed => (gap >= cfg.pi).then_some(Branch::Fixed),
        Strategy::Relative => {
            (gap >= cfg.delta * state.u_applied.abs() + cfg.pi_star).then_some(Branch::Relative)
        }
        Strategy::Switch => {
            if state.u_applied.abs() >= cfg.gate {
                (gap >= cfg.delta * state.u_applied.abs() + cfg.pi_star)
                    .then_some(Branch::Relative)
            } else {
                (gap >= cfg.pi).then_some(Branch::Fixed)
            }
        }
        Strategy::Periodic => (t - last >= cfg.period - grid_tol).then_some(Branch::Periodic),
    }
}

/// Commits an event: the candidate becomes the held value and the event is
/// recorded. Event times must strictly increase.
pub fn apply_event(state: &mut TriggerState, w_now: f64, t: f64, branch: Branch) -> Result<()> {
    if let Some(last) = state.last_event_time {
        if t <= last {
            return Err(Error::EventOrder {
                last,
                attempted: t,
            });
        }
    }
    state.u_applied = w_now;
    state.w_current = w_now;
    state.last_event_time = Some(t);
    match branch {
        Branch::Fixed => state.count_fixed_branch += 1,
        Branch::Relative => state.count_relative_branch += 1,
        Branch::Periodic => {}
    }
    state.events.push(Event {
        time: t,
        branch,
        u: w_now,
    });
    Ok(())
}
