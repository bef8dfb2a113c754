//! Adaptive backstepping control laws with dynamic-surface filters.
//!
//! Level 1 works on the graph consensus error; levels 2..n work on the
//! observer-estimated surface errors `z_k = x_hat_k - alpha_bar_k`. Each
//! virtual control is passed through a first-order low-pass filter instead of
//! being differentiated, and a single scalar estimate `theta_hat` replaces the
//! per-network weight norms inside the control laws.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::Topology;

/// Backstepping gain set for one follower class.
///
/// `r` are the per-level feedback gains (negative for damping), `c` the
/// widths of the neural compensation terms, `eta`/`h` the adaptation gains
/// and leakages, `m` the filter time constants for levels 2..n, and
/// `lambda`/`o` the leakage and gain of the scalar estimate update.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerGains {
    r: Vec<f64>,
    c: Vec<f64>,
    eta: Vec<f64>,
    h: Vec<f64>,
    m: Vec<f64>,
    lambda: f64,
    o: f64,
}

impl ControllerGains {
    pub fn new(
        r: Vec<f64>,
        c: Vec<f64>,
        eta: Vec<f64>,
        h: Vec<f64>,
        m: Vec<f64>,
        lambda: f64,
        o: f64,
    ) -> Result<Self> {
        let n = r.len();
        if n == 0 {
            return Err(Error::Parameter {
                name: "controller order",
                constraint: ">= 1",
                value: 0.0,
            });
        }
        for (context, list) in [("controller c gains", &c), ("controller eta gains", &eta), ("controller h gains", &h)] {
            if list.len() != n {
                return Err(Error::Length {
                    context,
                    expected: n,
                    actual: list.len(),
                });
            }
        }
        if m.len() != n - 1 {
            return Err(Error::Length {
                context: "controller filter constants",
                expected: n - 1,
                actual: m.len(),
            });
        }
        for (name, list) in [("c", &c), ("eta", &eta), ("h", &h), ("m", &m)] {
            for &value in list.iter() {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(Error::Parameter {
                        name: match name {
                            "c" => "c",
                            "eta" => "eta",
                            "h" => "h",
                            _ => "m",
                        },
                        constraint: "> 0",
                        value,
                    });
                }
            }
        }
        if !(lambda > 0.0) {
            return Err(Error::Parameter {
                name: "lambda",
                constraint: "> 0",
                value: lambda,
            });
        }
        if !(o > 0.0) {
            return Err(Error::Parameter {
                name: "o",
                constraint: "> 0",
                value: o,
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter {
                name: "r",
                constraint: "finite",
                value: f64::NAN,
            });
        }
        Ok(Self {
            r,
            c,
            eta,
            h,
            m,
            lambda,
            o,
        })
    }

    pub fn order(&self) -> usize {
        self.r.len()
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn o(&self) -> f64 {
        self.o
    }

    /// Non-fatal configuration advisories. The dynamic-surface analysis wants
    /// small filter constants; flag anything sluggish.
    pub fn warnings(&self) -> Vec<String> {
        let mut notes = Vec::new();
        for (k, &m) in self.m.iter().enumerate() {
            if m > 0.1 {
                notes.push(format!(
                    "filter constant m[{}] = {m} is large; the surface-error analysis assumes a fast filter (m <= 0.1)",
                    k + 1
                ));
            }
        }
        for (k, &r) in self.r.iter().enumerate() {
            if r >= 0.0 {
                notes.push(format!(
                    "feedback gain r[{}] = {r} is non-negative; damping requires r < 0",
                    k + 1
                ));
            }
        }
        notes
    }
}

/// First-level virtual control, scaled by the graph coupling `d_i + b_i`:
/// `(r1 z1 - z1/2 - theta_hat/(2 c1^2) z1 |E|^2) / (d_i + b_i)`.
pub fn virtual_control_1(
    gains: &ControllerGains,
    topology: &Topology,
    i: usize,
    z1: f64,
    theta_hat: f64,
    basis_t1: &DVector<f64>,
) -> Result<f64> {
    if i >= topology.n_followers() {
        return Err(Error::FollowerIndex {
            index: i,
            n: topology.n_followers(),
        });
    }
    let coupling = topology.coupling(i);
    let c1 = gains.c[0];
    let nn = theta_hat / (2.0 * c1 * c1) * z1 * basis_t1.norm_squared();
    Ok((gains.r[0] * z1 - 0.5 * z1 - nn) / coupling)
}

/// Virtual control for level `k` in `2..=n` (the level-`n` value is the
/// continuous control candidate):
/// `r_k z_k - z_k/2 + (alpha_k - alpha_bar_k)/m_k - q_k psi1
///  - theta_hat/(2 c_k^2) z_k |E|^2`.
#[allow(clippy::too_many_arguments)]
pub fn virtual_control_k(
    gains: &ControllerGains,
    k: usize,
    z_k: f64,
    theta_hat: f64,
    basis_tk: &DVector<f64>,
    alpha_k: f64,
    alpha_bar_k: f64,
    psi1: f64,
    q_k: f64,
) -> Result<f64> {
    let n = gains.order();
    if k < 2 || k > n {
        return Err(Error::Parameter {
            name: "backstepping level",
            constraint: "2 <= k <= n",
            value: k as f64,
        });
    }
    let c_k = gains.c[k - 1];
    let nn = theta_hat / (2.0 * c_k * c_k) * z_k * basis_tk.norm_squared();
    Ok(gains.r[k - 1] * z_k - 0.5 * z_k + (alpha_k - alpha_bar_k) / gains.m[k - 2]
        - q_k * psi1
        - nn)
}

/// First-order low-pass filter dynamics: `alpha_bar' = (alpha - alpha_bar)/m`.
pub fn filter_derivative(m_k: f64, alpha_bar_k: f64, alpha_k: f64) -> f64 {
    (alpha_k - alpha_bar_k) / m_k
}

/// Update rate of the scalar weight-norm estimate:
/// `-lambda theta_hat + sum_k o/(2 c_k^2) z_k^2 |E_k|^2`.
pub fn theta_update_rate(
    gains: &ControllerGains,
    theta_hat: f64,
    z: &[f64],
    basis_norms_sq: &[f64],
) -> Result<f64> {
    let n = gains.order();
    if z.len() != n {
        return Err(Error::Length {
            context: "theta update surface errors",
            expected: n,
            actual: z.len(),
        });
    }
    if basis_norms_sq.len() != n {
        return Err(Error::Length {
            context: "theta update basis norms",
            expected: n,
            actual: basis_norms_sq.len(),
        });
    }
    let mut drive = 0.0;
    for k in 0..n {
        let c_k = gains.c[k];
        drive += gains.o / (2.0 * c_k * c_k) * z[k] * z[k] * basis_norms_sq[k];
    }
    Ok(-gains.lambda * theta_hat + drive)
}

/// Assembles the network input for level `k`. Level 1 carries the reference
/// and its derivative; higher levels carry the reference and `theta_hat`.
/// Neighbor slices must be ordered by ascending agent index and each prefix
/// must have exactly `k` entries.
#[allow(clippy::too_many_arguments)]
pub fn assemble_nn_input(
    k: usize,
    y_r: f64,
    y_r_dot: f64,
    theta_hat: f64,
    own_x_hat: &[f64],
    neighbor_x_hats: &[&[f64]],
    own_varpi_hat: &[f64],
    neighbor_varpi_hats: &[&[f64]],
) -> Result<DVector<f64>> {
    if k == 0 {
        return Err(Error::Parameter {
            name: "nn input level",
            constraint: ">= 1",
            value: 0.0,
        });
    }
    if own_x_hat.len() != k || own_varpi_hat.len() != k {
        return Err(Error::Length {
            context: "nn input own prefix",
            expected: k,
            actual: own_x_hat.len().min(own_varpi_hat.len()),
        });
    }
    if neighbor_x_hats.len() != neighbor_varpi_hats.len() {
        return Err(Error::Length {
            context: "nn input neighbor sets",
            expected: neighbor_x_hats.len(),
            actual: neighbor_varpi_hats.len(),
        });
    }
    for prefix in neighbor_x_hats.iter().chain(neighbor_varpi_hats.iter()) {
        if prefix.len() != k {
            return Err(Error::Length {
                context: "nn input neighbor prefix",
                expected: k,
                actual: prefix.len(),
            });
        }
    }
    let neighbors = neighbor_x_hats.len();
    let dim = 2 + 2 * k * (1 + neighbors);
    let mut input = Vec::with_capacity(dim);
    input.push(y_r);
    input.push(if k == 1 { y_r_dot } else { theta_hat });
    input.extend_from_slice(own_x_hat);
    for prefix in neighbor_x_hats {
        input.extend_from_slice(prefix);
    }
    input.extend_from_slice(own_varpi_hat);
    for prefix in neighbor_varpi_hats {
        input.extend_from_slice(prefix);
    }
    Ok(DVector::from_vec(input))
}
