//! Ground-truth follower dynamics, disturbance signals, and the leader
//! reference trajectory.
//!
//! Each follower is a chain of integrators in semi-strict-feedback form:
//! level `k` evolves as `x[k+1] + f_k(x) + xi_k(x, t)`, the last level takes
//! the control input in place of the next state. States are dimensionless
//! simulation quantities.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::Expression;

pub type DriftFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub type DisturbanceFn = dyn Fn(&[f64], f64) -> f64 + Send + Sync;

/// Drift and disturbance functions for one follower class.
///
/// Drift level `k` is meant to depend only on the first `k` state components;
/// the expression-based constructor enforces this, while closure-based
/// construction leaves it to the caller (the shipped benchmark dynamics
/// deliberately evaluate a trailing state inside an exponential envelope).
pub struct PlantDynamics {
    order: usize,
    drift: Vec<Box<DriftFn>>,
    disturbance: Vec<Box<DisturbanceFn>>,
}

impl fmt::Debug for PlantDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlantDynamics")
            .field("order", &self.order)
            .finish_non_exhaustive()
    }
}

impl PlantDynamics {
    pub fn new(
        order: usize,
        drift: Vec<Box<DriftFn>>,
        disturbance: Vec<Box<DisturbanceFn>>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::Parameter {
                name: "plant order",
                constraint: ">= 1",
                value: 0.0,
            });
        }
        if drift.len() != order {
            return Err(Error::Length {
                context: "plant drift functions",
                expected: order,
                actual: drift.len(),
            });
        }
        if disturbance.len() != order {
            return Err(Error::Length {
                context: "plant disturbance functions",
                expected: order,
                actual: disturbance.len(),
            });
        }
        Ok(Self {
            order,
            drift,
            disturbance,
        })
    }

    /// Builds dynamics from whitelisted closed-form expressions. Drift level
    /// `k` may reference `x1..xk` only and never `t`; disturbances may use the
    /// whole state and `t`.
    pub fn from_expressions<S: AsRef<str>>(drift: &[S], disturbance: &[S]) -> Result<Self> {
        let order = drift.len();
        if order == 0 {
            return Err(Error::Parameter {
                name: "plant order",
                constraint: ">= 1",
                value: 0.0,
            });
        }
        if disturbance.len() != order {
            return Err(Error::Length {
                context: "plant disturbance expressions",
                expected: order,
                actual: disturbance.len(),
            });
        }
        let mut drift_fns: Vec<Box<DriftFn>> = Vec::with_capacity(order);
        for (k, src) in drift.iter().enumerate() {
            let expr = Expression::parse(src.as_ref())?;
            if expr.uses_time() {
                return Err(Error::Expr(format!(
                    "drift level {} must not depend on t: '{}'",
                    k + 1,
                    expr.source()
                )));
            }
            if let Some(max) = expr.max_state_index() {
                if max > k + 1 {
                    return Err(Error::Expr(format!(
                        "drift level {} may only use x1..x{}, found x{} in '{}'",
                        k + 1,
                        k + 1,
                        max,
                        expr.source()
                    )));
                }
            }
            drift_fns.push(Box::new(move |x: &[f64]| expr.eval(x, 0.0)));
        }
        let mut dist_fns: Vec<Box<DisturbanceFn>> = Vec::with_capacity(order);
        for (k, src) in disturbance.iter().enumerate() {
            let expr = Expression::parse(src.as_ref())?;
            if let Some(max) = expr.max_state_index() {
                if max > order {
                    return Err(Error::Expr(format!(
                        "disturbance level {} may only use x1..x{}, found x{} in '{}'",
                        k + 1,
                        order,
                        max,
                        expr.source()
                    )));
                }
            }
            dist_fns.push(Box::new(move |x: &[f64], t: f64| expr.eval(x, t)));
        }
        Self::new(order, drift_fns, dist_fns)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Drift `f_k` at 0-based level `k`, evaluated on the full state slice.
    pub fn drift(&self, level: usize, x: &[f64]) -> f64 {
        (self.drift[level])(x)
    }

    /// Disturbance `xi_k` at 0-based level `k`.
    pub fn disturbance(&self, level: usize, x: &[f64], t: f64) -> f64 {
        (self.disturbance[level])(x, t)
    }

    /// State derivative under control `u`, written into `out`.
    pub fn derivative_into(&self, x: &[f64], u: f64, t: f64, out: &mut [f64]) -> Result<()> {
        let n = self.order;
        if x.len() != n {
            return Err(Error::Length {
                context: "plant state",
                expected: n,
                actual: x.len(),
            });
        }
        for k in 0..n {
            let feed = if k + 1 < n { x[k + 1] } else { u };
            out[k] = feed + self.drift(k, x) + self.disturbance(k, x, t);
            if !out[k].is_finite() {
                return Err(Error::NonFinite {
                    what: "plant derivative",
                    level: k + 1,
                });
            }
        }
        Ok(())
    }

    pub fn derivative(&self, x: &[f64], u: f64, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.order];
        self.derivative_into(x, u, t, &mut out)?;
        Ok(out)
    }
}

/// The second-order benchmark dynamics shared by all four followers.
pub fn benchmark_dynamics() -> PlantDynamics {
    let drift: Vec<Box<DriftFn>> = vec![
        Box::new(|x: &[f64]| 0.8 * x[0] * (-1.4 * x[1] * x[1]).exp()),
        Box::new(|x: &[f64]| -0.5 * x[0] * x[0] * x[1].cos()),
    ];
    let disturbance: Vec<Box<DisturbanceFn>> = vec![
        Box::new(|x: &[f64], t: f64| 0.8 * x[0] * x[1].sin() * t.cos().powi(2)),
        Box::new(|x: &[f64], t: f64| 0.2 * x[1] * x[0].cos() * t.cos().powi(2)),
    ];
    PlantDynamics::new(2, drift, disturbance).expect("benchmark dynamics are well formed")
}

pub type TimeFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Leader reference trajectory with its analytic derivative.
pub struct ReferenceSignal {
    y_r: Box<TimeFn>,
    y_r_dot: Box<TimeFn>,
}

impl fmt::Debug for ReferenceSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceSignal").finish_non_exhaustive()
    }
}

impl ReferenceSignal {
    pub fn new(y_r: Box<TimeFn>, y_r_dot: Box<TimeFn>) -> Self {
        Self { y_r, y_r_dot }
    }

    /// Builds a reference from expressions over `t` alone.
    pub fn from_expressions(y_r: &str, y_r_dot: &str) -> Result<Self> {
        let r = Expression::parse(y_r)?;
        let rd = Expression::parse(y_r_dot)?;
        for expr in [&r, &rd] {
            if expr.max_state_index().is_some() {
                return Err(Error::Expr(format!(
                    "reference expressions may only use t: '{}'",
                    expr.source()
                )));
            }
        }
        Ok(Self::new(
            Box::new(move |t| r.eval(&[], t)),
            Box::new(move |t| rd.eval(&[], t)),
        ))
    }

    pub fn y_r(&self, t: f64) -> f64 {
        (self.y_r)(t)
    }

    pub fn y_r_dot(&self, t: f64) -> f64 {
        (self.y_r_dot)(t)
    }

    /// Checks the stated derivative against a central finite difference on a
    /// uniform grid. Guards against a mistyped derivative in a scenario file.
    pub fn check_derivative_consistency(
        &self,
        t0: f64,
        t1: f64,
        samples: usize,
        h: f64,
        tol: f64,
    ) -> Result<()> {
        for s in 0..samples {
            let t = t0 + (t1 - t0) * (s as f64) / (samples.max(2) - 1) as f64;
            let fd = (self.y_r(t + h) - self.y_r(t - h)) / (2.0 * h);
            let difference = (self.y_r_dot(t) - fd).abs();
            if !(difference < tol) {
                return Err(Error::ReferenceMismatch { t, difference });
            }
        }
        Ok(())
    }
}

/// The benchmark leader trajectory `-0.5 sin(4t) cos(2t)`.
pub fn benchmark_reference() -> ReferenceSignal {
    ReferenceSignal::new(
        Box::new(|t: f64| -0.5 * (4.0 * t).sin() * (2.0 * t).cos()),
        Box::new(|t: f64| -2.0 * (4.0 * t).cos() * (2.0 * t).cos() + (4.0 * t).sin() * (2.0 * t).sin()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn benchmark_derivative_at_initial_point() {
        let dynamics = benchmark_dynamics();
        let dx = dynamics.derivative(&[0.2, 0.0], 0.0, 0.0).unwrap();
        assert_relative_eq!(dx[0], 0.16, max_relative = 1e-15);
        // Level 2: u + f2 + xi2 = 0 - 0.5*0.04*cos(0) + 0.
        assert_relative_eq!(dx[1], -0.02, max_relative = 1e-12);
    }

    #[test]
    fn disturbance_vanishes_when_second_state_is_zero() {
        let dynamics = benchmark_dynamics();
        assert_eq!(dynamics.disturbance(0, &[1.0, 0.0], 1.234), 0.0);
    }

    #[test]
    fn zero_dynamics_at_equilibrium() {
        let zero = PlantDynamics::from_expressions(&["0", "0"], &["0", "0"]).unwrap();
        assert_eq!(zero.derivative(&[0.0, 0.0], 0.0, 0.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn benchmark_drift_and_disturbance_values() {
        let dynamics = benchmark_dynamics();
        assert_relative_eq!(dynamics.drift(1, &[1.0, 0.0]), -0.5, max_relative = 1e-15);
        assert_eq!(dynamics.drift(0, &[0.0, 3.7]), 0.0);
        assert_relative_eq!(
            dynamics.disturbance(1, &[0.0, 1.0], 0.0),
            0.2,
            max_relative = 1e-15
        );
    }

    #[test]
    fn benchmark_reference_values() {
        let reference = benchmark_reference();
        assert_eq!(reference.y_r(0.0), 0.0);
        assert_eq!(reference.y_r_dot(0.0), -2.0);
        for s in 0..500 {
            let t = s as f64 * 0.02;
            assert!(reference.y_r(t).abs() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn benchmark_reference_derivative_consistency() {
        benchmark_reference()
            .check_derivative_consistency(0.0, 5.0, 1000, 1e-5, 1e-6)
            .unwrap();
    }

    #[test]
    fn mismatched_reference_derivative_is_rejected() {
        let broken = ReferenceSignal::from_expressions("sin(t)", "sin(t)").unwrap();
        assert!(matches!(
            broken.check_derivative_consistency(0.0, 5.0, 100, 1e-5, 1e-6),
            Err(Error::ReferenceMismatch { .. })
        ));
    }

    #[test]
    fn expression_dynamics_enforce_prefix_dependence() {
        let err = PlantDynamics::from_expressions(&["x2", "0"], &["0", "0"]).unwrap_err();
        assert!(err.to_string().contains("may only use x1..x1"));
        let err = PlantDynamics::from_expressions(&["t*x1", "0"], &["0", "0"]).unwrap_err();
        assert!(err.to_string().contains("must not depend on t"));
        assert!(PlantDynamics::from_expressions(&["x1", "x1*x2"], &["t", "t*x2"]).is_ok());
    }

    #[test]
    fn non_finite_drift_reports_level() {
        let dynamics =
            PlantDynamics::from_expressions(&["0", "exp(x1)"], &["0", "0"]).unwrap();
        assert!(matches!(
            dynamics.derivative(&[710.0, 0.0], 0.0, 0.0),
            Err(Error::NonFinite {
                what: "plant derivative",
                level: 2
            })
        ));
    }

    proptest! {
        #[test]
        fn benchmark_disturbances_obey_stated_envelopes(
            x1 in -3.0f64..3.0,
            x2 in -3.0f64..3.0,
            t in 0.0f64..10.0,
        ) {
            let dynamics = benchmark_dynamics();
            let x = [x1, x2];
            prop_assert!(dynamics.disturbance(0, &x, t).abs() <= 0.8 * x1.abs() + 1e-15);
            prop_assert!(dynamics.disturbance(1, &x, t).abs() <= 0.2 * x2.abs() + 1e-15);
        }

        #[test]
        fn expression_drift_is_semi_strict(
            x1 in -2.0f64..2.0,
            x2a in -2.0f64..2.0,
            x2b in -2.0f64..2.0,
        ) {
            let dynamics = PlantDynamics::from_expressions(
                &["0.5*x1^2", "x1*cos(x2)"],
                &["0", "0"],
            ).unwrap();
            // Level 1 must ignore the second component entirely.
            prop_assert_eq!(
                dynamics.drift(0, &[x1, x2a]),
                dynamics.drift(0, &[x1, x2b])
            );
        }
    }
}
