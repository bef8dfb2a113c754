//! Closed-loop simulation: fixed-step integration of the coupled plant,
//! observer, adaptation, and filter dynamics with zero-order-hold control.
//!
//! A run is a pure function of its `Scenario`: no wall clock, no global
//! randomness. Each step advances the concatenated state with the classical
//! fourth-order Runge-Kutta scheme under a held control, then re-evaluates
//! the candidate signals on the post-step state and applies the trigger test
//! once. Every strategy fires at t = 0 to initialize the hold.

use std::ops::Range;
use std::sync::Arc;

use crate::controller::{self, ControllerGains};
use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::observer::{self, ObserverGains};
use crate::plant::{PlantDynamics, ReferenceSignal};
use crate::rbf::{self, RbfLayout};
use crate::trigger::{self, Branch, Strategy, TriggerConfig, TriggerState};

/// Layout parameters for the approximator networks a scenario builds.
///
/// One- and two-dimensional inputs get regular grids with width equal to the
/// grid spacing; higher-dimensional inputs (the controller networks) get
/// `controller_nodes` Halton-sequence centers with a shared width. The `seed`
/// offsets the Halton sequence so layouts are reproducible from config alone.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfConfig {
    pub range: (f64, f64),
    pub nodes_1d: usize,
    pub nodes_per_axis_2d: usize,
    pub controller_nodes: usize,
    pub controller_width: f64,
    pub seed: u64,
}

impl Default for RbfConfig {
    fn default() -> Self {
        Self {
            range: (-2.0, 2.0),
            nodes_1d: 11,
            nodes_per_axis_2d: 5,
            controller_nodes: 30,
            controller_width: 2.0,
            seed: 1,
        }
    }
}

impl RbfConfig {
    fn layout_for_dim(&self, dim: usize) -> Result<RbfLayout> {
        let (lo, hi) = self.range;
        match dim {
            1 => RbfLayout::grid_1d(lo, hi, self.nodes_1d),
            2 => RbfLayout::grid_2d(lo, hi, self.nodes_per_axis_2d),
            d => RbfLayout::low_discrepancy(
                d,
                self.controller_nodes,
                lo,
                hi,
                self.controller_width,
                self.seed,
            ),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.range.1 > self.range.0) {
            return Err(Error::Parameter {
                name: "rbf range",
                constraint: "hi > lo",
                value: self.range.1,
            });
        }
        if self.nodes_1d < 2 || self.nodes_per_axis_2d < 2 || self.controller_nodes == 0 {
            return Err(Error::Parameter {
                name: "rbf node counts",
                constraint: ">= 2 per grid axis and >= 1 controller nodes",
                value: self.nodes_1d as f64,
            });
        }
        if !(self.controller_width > 0.0) {
            return Err(Error::Parameter {
                name: "rbf controller width",
                constraint: "> 0",
                value: self.controller_width,
            });
        }
        Ok(())
    }
}

/// Initial plant and observer states of one follower.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentInit {
    pub x0: Vec<f64>,
    pub xhat0: Vec<f64>,
}

/// Everything one deterministic run needs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub topology: Topology,
    pub plant: Arc<PlantDynamics>,
    pub reference: Arc<ReferenceSignal>,
    pub observer: ObserverGains,
    pub controller: ControllerGains,
    pub rbf: RbfConfig,
    pub trigger: TriggerConfig,
    pub init: Vec<AgentInit>,
    pub t_end: f64,
    pub dt: f64,
    pub log_stride: usize,
    /// Ceiling for the boundedness check on |z|, |psi|, |theta_hat|, |W_hat|.
    pub bound_ceiling: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let n = self.plant.order();
        let agents = self.topology.n_followers();
        if self.observer.order() != n {
            return Err(Error::Length {
                context: "observer gain order",
                expected: n,
                actual: self.observer.order(),
            });
        }
        if self.controller.order() != n {
            return Err(Error::Length {
                context: "controller gain order",
                expected: n,
                actual: self.controller.order(),
            });
        }
        if self.init.len() != agents {
            return Err(Error::Length {
                context: "initial conditions",
                expected: agents,
                actual: self.init.len(),
            });
        }
        for init in &self.init {
            if init.x0.len() != n {
                return Err(Error::Length {
                    context: "initial plant state",
                    expected: n,
                    actual: init.x0.len(),
                });
            }
            if init.xhat0.len() != n {
                return Err(Error::Length {
                    context: "initial observer state",
                    expected: n,
                    actual: init.xhat0.len(),
                });
            }
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Parameter {
                name: "dt",
                constraint: "> 0",
                value: self.dt,
            });
        }
        if !(self.t_end >= self.dt) {
            return Err(Error::Parameter {
                name: "t_end",
                constraint: ">= dt",
                value: self.t_end,
            });
        }
        if self.log_stride == 0 {
            return Err(Error::Parameter {
                name: "log_stride",
                constraint: ">= 1",
                value: 0.0,
            });
        }
        if !(self.bound_ceiling > 0.0) {
            return Err(Error::Parameter {
                name: "bound_ceiling",
                constraint: "> 0",
                value: self.bound_ceiling,
            });
        }
        self.rbf.validate()?;
        self.trigger.validate()?;
        Ok(())
    }

    /// Clone with a different trigger configuration. The clones share the
    /// plant and reference instances, which is what `compare` requires.
    pub fn with_trigger(&self, trigger: TriggerConfig) -> Scenario {
        Scenario {
            trigger,
            ..self.clone()
        }
    }

    fn comparable_to(&self, other: &Scenario) -> std::result::Result<(), String> {
        if !Arc::ptr_eq(&self.plant, &other.plant) {
            return Err("scenarios must share the same plant dynamics instance".into());
        }
        if !Arc::ptr_eq(&self.reference, &other.reference) {
            return Err("scenarios must share the same reference instance".into());
        }
        if self.topology != other.topology {
            return Err("topologies differ".into());
        }
        if self.observer != other.observer {
            return Err("observer gains differ".into());
        }
        if self.controller != other.controller {
            return Err("controller gains differ".into());
        }
        if self.rbf != other.rbf {
            return Err("rbf configurations differ".into());
        }
        if self.init != other.init {
            return Err("initial conditions differ".into());
        }
        if self.t_end != other.t_end || self.dt != other.dt {
            return Err("time grids differ".into());
        }
        if self.log_stride != other.log_stride {
            return Err("log strides differ".into());
        }
        if self.bound_ceiling != other.bound_ceiling {
            return Err("bound ceilings differ".into());
        }
        Ok(())
    }
}

/// Per-agent sampled series. Outer index of the per-level vectors is the
/// level, inner index the sample.
#[derive(Debug, Clone)]
pub struct AgentSeries {
    pub x: Vec<Vec<f64>>,
    pub x_hat: Vec<Vec<f64>>,
    pub varpi_hat: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub theta: Vec<f64>,
    pub w_norm: Vec<Vec<f64>>,
}

impl AgentSeries {
    fn new(order: usize, capacity: usize) -> Self {
        let levels = |cap| (0..order).map(|_| Vec::with_capacity(cap)).collect();
        Self {
            x: levels(capacity),
            x_hat: levels(capacity),
            varpi_hat: levels(capacity),
            z: levels(capacity),
            u: Vec::with_capacity(capacity),
            w: Vec::with_capacity(capacity),
            theta: Vec::with_capacity(capacity),
            w_norm: levels(capacity),
        }
    }
}

/// One controller update in the merged run-wide event log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoggedEvent {
    pub time: f64,
    pub agent: usize,
    pub branch: Branch,
    pub u: f64,
}

/// Sampled trajectories plus the merged event log of one run.
#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub times: Vec<f64>,
    pub agents: Vec<AgentSeries>,
    pub events: Vec<LoggedEvent>,
}

/// Trigger economy and tracking figures for one agent.
#[derive(Debug, Clone)]
pub struct AgentMetrics {
    /// All events, including the t = 0 initialization.
    pub events_total: usize,
    pub events_fixed_branch: usize,
    pub events_relative_branch: usize,
    /// None when fewer than two events fired.
    pub min_interval: Option<f64>,
    pub mean_interval: Option<f64>,
    /// RMS of the consensus error over the first tenth of the horizon.
    pub early_rms_z1: f64,
    /// RMS of the consensus error over the final two fifths of the horizon.
    pub tail_rms_z1: f64,
    pub tail_max_z1: f64,
    /// Peak sampled slope of the candidate signal.
    pub max_w_rate: f64,
    /// Inter-event-time lower bound: threshold floor over peak slope.
    pub zeno_bound: Option<f64>,
}

/// Whole-run summary.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub agents: Vec<AgentMetrics>,
    /// Always false for a completed run; divergence aborts with an error.
    pub diverged: bool,
    pub max_abs_z: f64,
    pub max_psi_norm: f64,
    pub max_abs_theta: f64,
    pub max_w_hat_norm: f64,
    pub bound_ceiling: f64,
    /// True when every tracked magnitude stayed below the ceiling.
    pub bounds_ok: bool,
}

/// Runs one scenario to completion.
pub fn run(scenario: &Scenario) -> Result<(TrajectoryLog, RunMetrics)> {
    SimContext::new(scenario)?.simulate()
}

/// Comparison row: one strategy's run summary.
#[derive(Debug, Clone)]
pub struct ComparisonEntry {
    pub strategy: Strategy,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub entries: Vec<ComparisonEntry>,
}

/// Runs scenarios that differ only in their trigger configuration and
/// collects their metrics in input order. Runs execute concurrently; each is
/// individually deterministic.
pub fn compare(scenarios: &[Scenario]) -> Result<ComparisonReport> {
    if scenarios.is_empty() {
        return Err(Error::NotComparable("no scenarios given".into()));
    }
    for (idx, sc) in scenarios.iter().enumerate().skip(1) {
        sc.comparable_to(&scenarios[0])
            .map_err(|reason| Error::NotComparable(format!("scenario {idx}: {reason}")))?;
    }
    let mut outcomes: Vec<Option<Result<RunMetrics>>> = vec![None; scenarios.len()];
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|sc| scope.spawn(move || run(sc).map(|(_, metrics)| metrics)))
            .collect();
        for (slot, handle) in outcomes.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("simulation thread panicked"));
        }
    });
    let mut entries = Vec::with_capacity(scenarios.len());
    for (sc, outcome) in scenarios.iter().zip(outcomes) {
        let metrics = outcome.expect("all slots filled")?;
        entries.push(ComparisonEntry {
            strategy: sc.trigger.strategy,
            metrics,
        });
    }
    Ok(ComparisonReport { entries })
}

/// Scratch buffers for [`rk4_step`].
pub struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }
}

/// One classical fourth-order Runge-Kutta step of `y' = f(t, y)`, in place.
pub fn rk4_step<F>(f: &mut F, t: f64, dt: f64, y: &mut [f64], work: &mut Rk4Work) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let dim = y.len();
    f(t, y, &mut work.k1)?;
    for j in 0..dim {
        work.tmp[j] = y[j] + 0.5 * dt * work.k1[j];
    }
    f(t + 0.5 * dt, &work.tmp, &mut work.k2)?;
    for j in 0..dim {
        work.tmp[j] = y[j] + 0.5 * dt * work.k2[j];
    }
    f(t + 0.5 * dt, &work.tmp, &mut work.k3)?;
    for j in 0..dim {
        work.tmp[j] = y[j] + dt * work.k3[j];
    }
    f(t + dt, &work.tmp, &mut work.k4)?;
    for j in 0..dim {
        y[j] += dt / 6.0 * (work.k1[j] + 2.0 * work.k2[j] + 2.0 * work.k3[j] + work.k4[j]);
    }
    Ok(())
}

/// Offsets of one agent's slice of the packed ODE state:
/// `x | x_hat | tau_hat | W_hat per level | alpha_bar | theta_hat`.
struct Layout {
    n: usize,
    w_offsets: Vec<usize>,
    w_lens: Vec<usize>,
    per_agent: usize,
}

impl Layout {
    fn new(n: usize, w_lens: Vec<usize>) -> Self {
        let mut w_offsets = Vec::with_capacity(w_lens.len());
        let mut offset = 3 * n;
        for &len in &w_lens {
            w_offsets.push(offset);
            offset += len;
        }
        let per_agent = offset + (n - 1) + 1;
        Self {
            n,
            w_offsets,
            w_lens,
            per_agent,
        }
    }

    fn base(&self, agent: usize) -> usize {
        agent * self.per_agent
    }

    fn x(&self, agent: usize) -> Range<usize> {
        let b = self.base(agent);
        b..b + self.n
    }

    fn x_hat(&self, agent: usize) -> Range<usize> {
        let b = self.base(agent) + self.n;
        b..b + self.n
    }

    fn tau_hat(&self, agent: usize) -> Range<usize> {
        let b = self.base(agent) + 2 * self.n;
        b..b + self.n
    }

    fn w(&self, agent: usize, level: usize) -> Range<usize> {
        let b = self.base(agent) + self.w_offsets[level];
        b..b + self.w_lens[level]
    }

    fn alpha_bar(&self, agent: usize) -> Range<usize> {
        let b = self.base(agent) + self.w_offsets.last().unwrap() + self.w_lens.last().unwrap();
        b..b + self.n - 1
    }

    fn theta(&self, agent: usize) -> usize {
        self.base(agent) + self.per_agent - 1
    }

    fn total(&self, agents: usize) -> usize {
        agents * self.per_agent
    }
}

/// Controller-side quantities evaluated at one instant.
struct ControlEval {
    varpi_hat: Vec<Vec<f64>>,
    f_hat: Vec<Vec<f64>>,
    obs_basis: Vec<Vec<nalgebra::DVector<f64>>>,
    z: Vec<Vec<f64>>,
    /// Virtual controls per agent: entry `k-1` holds the level-(k+1) control,
    /// so the last entry is the continuous control candidate.
    alpha: Vec<Vec<f64>>,
    basis_sq: Vec<Vec<f64>>,
}

impl ControlEval {
    fn final_control(&self, agent: usize) -> f64 {
        *self.alpha[agent].last().unwrap()
    }

    fn z_last(&self, agent: usize) -> f64 {
        *self.z[agent].last().unwrap()
    }
}

struct SimContext<'a> {
    sc: &'a Scenario,
    n: usize,
    agents: usize,
    layout: Layout,
    obs_layouts: Vec<RbfLayout>,
    ctrl_layouts: Vec<Vec<RbfLayout>>,
}

impl<'a> SimContext<'a> {
    fn new(sc: &'a Scenario) -> Result<Self> {
        sc.validate()?;
        let n = sc.plant.order();
        let agents = sc.topology.n_followers();
        let obs_layouts: Vec<RbfLayout> = (1..=n)
            .map(|dim| sc.rbf.layout_for_dim(dim))
            .collect::<Result<_>>()?;
        let mut ctrl_layouts = Vec::with_capacity(agents);
        for i in 0..agents {
            let neighbors = sc.topology.neighbors(i).len();
            let layouts: Vec<RbfLayout> = (1..=n)
                .map(|k| sc.rbf.layout_for_dim(2 + 2 * k * (1 + neighbors)))
                .collect::<Result<_>>()?;
            ctrl_layouts.push(layouts);
        }
        let w_lens = obs_layouts.iter().map(|l| l.node_count()).collect();
        Ok(Self {
            sc,
            n,
            agents,
            layout: Layout::new(n, w_lens),
            obs_layouts,
            ctrl_layouts,
        })
    }

    fn initial_state(&self) -> Vec<f64> {
        let mut state = vec![0.0; self.layout.total(self.agents)];
        let kappa = self.sc.observer.kappa();
        for (i, init) in self.sc.init.iter().enumerate() {
            state[self.layout.x(i)].copy_from_slice(&init.x0);
            state[self.layout.x_hat(i)].copy_from_slice(&init.xhat0);
            // The disturbance estimate is tau_hat + kappa * x_hat and its
            // only correction channel is the output error, so it must start
            // unbiased: tau_hat(0) = -kappa * x_hat(0).
            let tau_range = self.layout.tau_hat(i);
            for l in 0..self.n {
                state[tau_range.start + l] = -kappa[l] * init.xhat0[l];
            }
        }
        state
    }

    /// Evaluates observer outputs, consensus errors, the virtual-control
    /// chain, and the controller network norms at time `t`.
    fn control(&self, t: f64, s: &[f64]) -> Result<ControlEval> {
        let n = self.n;
        let kappa = self.sc.observer.kappa();
        let q = self.sc.observer.q();
        let y_r = self.sc.reference.y_r(t);
        let y_r_dot = self.sc.reference.y_r_dot(t);

        let mut outputs = vec![0.0; self.agents];
        let mut psi1 = vec![0.0; self.agents];
        let mut varpi_hat = vec![vec![0.0; n]; self.agents];
        let mut f_hat = vec![vec![0.0; n]; self.agents];
        let mut obs_basis = Vec::with_capacity(self.agents);
        for i in 0..self.agents {
            let x = &s[self.layout.x(i)];
            let x_hat = &s[self.layout.x_hat(i)];
            let tau_hat = &s[self.layout.tau_hat(i)];
            outputs[i] = x[0];
            psi1[i] = x[0] - x_hat[0];
            let mut per_level = Vec::with_capacity(n);
            for l in 0..n {
                let basis = self.obs_layouts[l].basis(&x_hat[..=l])?;
                let weights = &s[self.layout.w(i, l)];
                f_hat[i][l] = weights.iter().zip(basis.iter()).map(|(w, e)| w * e).sum();
                varpi_hat[i][l] = tau_hat[l] + kappa[l] * x_hat[l];
                per_level.push(basis);
            }
            obs_basis.push(per_level);
        }

        let z1 = self.sc.topology.consensus_errors(&outputs, y_r)?;
        let mut z = vec![vec![0.0; n]; self.agents];
        let mut alpha = vec![vec![0.0; n]; self.agents];
        let mut basis_sq = vec![vec![0.0; n]; self.agents];
        for i in 0..self.agents {
            let theta = s[self.layout.theta(i)];
            let x_hat = &s[self.layout.x_hat(i)];
            let alpha_bar = &s[self.layout.alpha_bar(i)];
            let neighbors = self.sc.topology.neighbors(i);
            z[i][0] = z1[i];
            for k in 1..=n {
                if k >= 2 {
                    // Surface errors compare the plant state against the
                    // filtered virtual control; the simulator owns the plant,
                    // so the true state is available here.
                    z[i][k - 1] = s[self.layout.x(i)][k - 1] - alpha_bar[k - 2];
                }
                let own_x = &x_hat[..k];
                let own_v = &varpi_hat[i][..k];
                let neighbor_x: Vec<&[f64]> = neighbors
                    .iter()
                    .map(|&j| &s[self.layout.x_hat(j)][..k])
                    .collect();
                let neighbor_v: Vec<&[f64]> =
                    neighbors.iter().map(|&j| &varpi_hat[j][..k]).collect();
                let input = controller::assemble_nn_input(
                    k,
                    y_r,
                    y_r_dot,
                    theta,
                    own_x,
                    &neighbor_x,
                    own_v,
                    &neighbor_v,
                )?;
                let basis = self.ctrl_layouts[i][k - 1].basis(input.as_slice())?;
                basis_sq[i][k - 1] = basis.norm_squared();
                alpha[i][k - 1] = if k == 1 {
                    controller::virtual_control_1(
                        &self.sc.controller,
                        &self.sc.topology,
                        i,
                        z[i][0],
                        theta,
                        &basis,
                    )?
                } else {
                    controller::virtual_control_k(
                        &self.sc.controller,
                        k,
                        z[i][k - 1],
                        theta,
                        &basis,
                        alpha[i][k - 2],
                        alpha_bar[k - 2],
                        psi1[i],
                        q[k - 1],
                    )?
                };
            }
        }

        Ok(ControlEval {
            varpi_hat,
            f_hat,
            obs_basis,
            z,
            alpha,
            basis_sq,
        })
    }

    /// Full coupled derivative with the control held at `u`.
    fn derivative(&self, t: f64, s: &[f64], u: &[f64], out: &mut [f64]) -> Result<()> {
        let eval = self.control(t, s)?;
        let n = self.n;
        let gains = &self.sc.controller;
        let kappa = self.sc.observer.kappa();
        for i in 0..self.agents {
            let x = &s[self.layout.x(i)];
            let x_hat = &s[self.layout.x_hat(i)];
            let tau_hat = &s[self.layout.tau_hat(i)];

            {
                let (x_range, u_i) = (self.layout.x(i), u[i]);
                let x_out = &mut out[x_range];
                self.sc.plant.derivative_into(x, u_i, t, x_out)?;
            }
            observer::observer_derivative(
                &self.sc.observer,
                x_hat,
                tau_hat,
                x[0],
                u[i],
                &eval.f_hat[i],
                &mut out[self.layout.x_hat(i)],
            )?;
            observer::disturbance_observer_derivative(
                &self.sc.observer,
                x_hat,
                tau_hat,
                &eval.f_hat[i],
                u[i],
                &mut out[self.layout.tau_hat(i)],
            )?;
            for l in 0..n {
                // The adaptive law is driven by the true auxiliary variable;
                // the simulator knows the disturbance it injects.
                let tau_true = self.sc.plant.disturbance(l, x, t) - kappa[l] * x[l];
                let tau_tilde = tau_true - tau_hat[l];
                rbf::weight_update_rate_into(
                    &s[self.layout.w(i, l)],
                    eval.obs_basis[i][l].as_slice(),
                    tau_tilde,
                    gains.h()[l],
                    gains.eta()[l],
                    kappa[l],
                    &mut out[self.layout.w(i, l)],
                );
            }
            {
                let alpha_bar = &s[self.layout.alpha_bar(i)];
                let range = self.layout.alpha_bar(i);
                for k in 2..=n {
                    out[range.start + k - 2] = controller::filter_derivative(
                        gains.m()[k - 2],
                        alpha_bar[k - 2],
                        eval.alpha[i][k - 2],
                    );
                }
            }
            out[self.layout.theta(i)] = controller::theta_update_rate(
                gains,
                s[self.layout.theta(i)],
                &eval.z[i],
                &eval.basis_sq[i],
            )?;
        }
        Ok(())
    }

    /// Pins the filter states to the freshly computed virtual controls,
    /// one level per pass: each level's control depends on the filters of
    /// the levels below it.
    fn init_filters(&self, state: &mut [f64]) -> Result<()> {
        for level in 2..=self.n {
            let eval = self.control(0.0, state)?;
            for i in 0..self.agents {
                let range = self.layout.alpha_bar(i);
                state[range.start + level - 2] = eval.alpha[i][level - 2];
            }
        }
        Ok(())
    }

    fn first_non_finite_agent(&self, s: &[f64]) -> Option<usize> {
        (0..self.agents).find(|&i| {
            s[self.layout.base(i)..self.layout.base(i) + self.layout.per_agent]
                .iter()
                .any(|v| !v.is_finite())
        })
    }

    fn simulate(&self) -> Result<(TrajectoryLog, RunMetrics)> {
        let sc = self.sc;
        let dt = sc.dt;
        let steps = (sc.t_end / dt).round().max(1.0) as usize;

        let mut state = self.initial_state();
        self.init_filters(&mut state)?;

        let mut triggers: Vec<TriggerState> =
            (0..self.agents).map(|_| TriggerState::new()).collect();
        let mut u = vec![0.0; self.agents];
        let eval0 = self.control(0.0, &state)?;
        for i in 0..self.agents {
            let (w0, branch) =
                trigger::candidate(&sc.trigger, &triggers[i], eval0.final_control(i), eval0.z_last(i));
            trigger::apply_event(&mut triggers[i], w0, 0.0, branch)?;
            u[i] = triggers[i].u_applied;
        }

        let capacity = steps / sc.log_stride + 2;
        let mut log = TrajectoryLog {
            times: Vec::with_capacity(capacity),
            agents: (0..self.agents)
                .map(|_| AgentSeries::new(self.n, capacity))
                .collect(),
            events: Vec::new(),
        };
        let mut acc = MetricsAcc::new(self.agents, steps, dt);
        acc.absorb(self, 0, &state, &triggers, &eval0);
        self.push_sample(&mut log, 0.0, &state, &triggers, &eval0);

        let mut work = Rk4Work::new(state.len());
        for step in 1..=steps {
            let t_prev = (step - 1) as f64 * dt;
            let t_now = step as f64 * dt;
            {
                let u_held = &u;
                let mut f =
                    |t: f64, y: &[f64], dy: &mut [f64]| self.derivative(t, y, u_held, dy);
                rk4_step(&mut f, t_prev, dt, &mut state, &mut work)?;
            }
            if let Some(agent) = self.first_non_finite_agent(&state) {
                return Err(Error::Divergence {
                    time: t_now,
                    agent,
                });
            }
            let eval = self.control(t_now, &state)?;
            for i in 0..self.agents {
                let (w, _) = trigger::candidate(
                    &sc.trigger,
                    &triggers[i],
                    eval.final_control(i),
                    eval.z_last(i),
                );
                triggers[i].w_current = w;
                if let Some(branch) =
                    trigger::should_fire(&sc.trigger, &triggers[i], w, t_now, 0.5 * dt)
                {
                    trigger::apply_event(&mut triggers[i], w, t_now, branch)?;
                    u[i] = triggers[i].u_applied;
                }
            }
            acc.absorb(self, step, &state, &triggers, &eval);
            if step % sc.log_stride == 0 {
                self.push_sample(&mut log, t_now, &state, &triggers, &eval);
            }
        }

        for (i, trig) in triggers.iter().enumerate() {
            for event in &trig.events {
                log.events.push(LoggedEvent {
                    time: event.time,
                    agent: i,
                    branch: event.branch,
                    u: event.u,
                });
            }
        }
        log.events.sort_by(|a, b| {
            a.time
                .partial_cmp(&b.time)
                .unwrap()
                .then(a.agent.cmp(&b.agent))
        });

        let metrics = acc.finish(sc, &triggers);
        Ok((log, metrics))
    }

    fn push_sample(
        &self,
        log: &mut TrajectoryLog,
        t: f64,
        state: &[f64],
        triggers: &[TriggerState],
        eval: &ControlEval,
    ) {
        log.times.push(t);
        for i in 0..self.agents {
            let series = &mut log.agents[i];
            let x = &state[self.layout.x(i)];
            let x_hat = &state[self.layout.x_hat(i)];
            for l in 0..self.n {
                series.x[l].push(x[l]);
                series.x_hat[l].push(x_hat[l]);
                series.varpi_hat[l].push(eval.varpi_hat[i][l]);
                series.z[l].push(eval.z[i][l]);
                let w = &state[self.layout.w(i, l)];
                series.w_norm[l].push(w.iter().map(|v| v * v).sum::<f64>().sqrt());
            }
            series.u.push(triggers[i].u_applied);
            series.w.push(triggers[i].w_current);
            series.theta.push(state[self.layout.theta(i)]);
        }
    }
}

struct AgentAcc {
    early_sum_sq: f64,
    early_count: usize,
    tail_sum_sq: f64,
    tail_count: usize,
    tail_max: f64,
    prev_w: f64,
    max_w_rate: f64,
}

struct MetricsAcc {
    per_agent: Vec<AgentAcc>,
    early_end: usize,
    tail_start: usize,
    dt: f64,
    max_abs_z: f64,
    max_psi_norm: f64,
    max_abs_theta: f64,
    max_w_hat_norm: f64,
}

impl MetricsAcc {
    fn new(agents: usize, steps: usize, dt: f64) -> Self {
        Self {
            per_agent: (0..agents)
                .map(|_| AgentAcc {
                    early_sum_sq: 0.0,
                    early_count: 0,
                    tail_sum_sq: 0.0,
                    tail_count: 0,
                    tail_max: 0.0,
                    prev_w: 0.0,
                    max_w_rate: 0.0,
                })
                .collect(),
            early_end: steps / 10,
            tail_start: steps * 6 / 10,
            dt,
            max_abs_z: 0.0,
            max_psi_norm: 0.0,
            max_abs_theta: 0.0,
            max_w_hat_norm: 0.0,
        }
    }

    fn absorb(
        &mut self,
        ctx: &SimContext<'_>,
        step: usize,
        state: &[f64],
        triggers: &[TriggerState],
        eval: &ControlEval,
    ) {
        for i in 0..ctx.agents {
            let acc = &mut self.per_agent[i];
            let z1 = eval.z[i][0];
            if step <= self.early_end {
                acc.early_sum_sq += z1 * z1;
                acc.early_count += 1;
            }
            if step >= self.tail_start {
                acc.tail_sum_sq += z1 * z1;
                acc.tail_count += 1;
                acc.tail_max = acc.tail_max.max(z1.abs());
            }
            let w = triggers[i].w_current;
            if step > 0 {
                acc.max_w_rate = acc.max_w_rate.max((w - acc.prev_w).abs() / self.dt);
            }
            acc.prev_w = w;

            for l in 0..ctx.n {
                self.max_abs_z = self.max_abs_z.max(eval.z[i][l].abs());
            }
            let x = &state[ctx.layout.x(i)];
            let x_hat = &state[ctx.layout.x_hat(i)];
            let psi_norm = x
                .iter()
                .zip(x_hat)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            self.max_psi_norm = self.max_psi_norm.max(psi_norm);
            self.max_abs_theta = self
                .max_abs_theta
                .max(state[ctx.layout.theta(i)].abs());
            for l in 0..ctx.n {
                let w_hat = &state[ctx.layout.w(i, l)];
                let norm = w_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
                self.max_w_hat_norm = self.max_w_hat_norm.max(norm);
            }
        }
    }

    fn finish(self, sc: &Scenario, triggers: &[TriggerState]) -> RunMetrics {
        let floor = sc.trigger.threshold_floor();
        let agents = self
            .per_agent
            .into_iter()
            .zip(triggers)
            .map(|(acc, trig)| {
                let times: Vec<f64> = trig.events.iter().map(|e| e.time).collect();
                let min_interval = times
                    .windows(2)
                    .map(|pair| pair[1] - pair[0])
                    .fold(None, |best: Option<f64>, iv| {
                        Some(best.map_or(iv, |b| b.min(iv)))
                    });
                let mean_interval = (times.len() >= 2).then(|| {
                    (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64
                });
                AgentMetrics {
                    events_total: trig.events.len(),
                    events_fixed_branch: trig.count_fixed_branch,
                    events_relative_branch: trig.count_relative_branch,
                    min_interval,
                    mean_interval,
                    early_rms_z1: (acc.early_sum_sq / acc.early_count.max(1) as f64).sqrt(),
                    tail_rms_z1: (acc.tail_sum_sq / acc.tail_count.max(1) as f64).sqrt(),
                    tail_max_z1: acc.tail_max,
                    max_w_rate: acc.max_w_rate,
                    zeno_bound: floor.and_then(|f| {
                        (acc.max_w_rate > 0.0).then(|| f / acc.max_w_rate)
                    }),
                }
            })
            .collect();
        let bounds_ok = [
            self.max_abs_z,
            self.max_psi_norm,
            self.max_abs_theta,
            self.max_w_hat_norm,
        ]
        .iter()
        .all(|&v| v.is_finite() && v < sc.bound_ceiling);
        RunMetrics {
            agents,
            diverged: false,
            max_abs_z: self.max_abs_z,
            max_psi_norm: self.max_psi_norm,
            max_abs_theta: self.max_abs_theta,
            max_w_hat_norm: self.max_w_hat_norm,
            bound_ceiling: sc.bound_ceiling,
            bounds_ok,
        }
    }
}
