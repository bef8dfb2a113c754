//! Gaussian radial-basis networks and the adaptive weight law used by both
//! observer compensation and controller approximation.
//!
//! Node `j` of a layout responds with `exp(-|input - c_j|^2 / b_j^2)`, so every
//! component lies in `(0, 1]` and peaks exactly on the center. Approximation is
//! linear in the weights; online adaptation combines leakage with a term driven
//! by the disturbance estimation error.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Center/width layout of one Gaussian RBF network. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfLayout {
    input_dim: usize,
    /// node_count x input_dim.
    centers: DMatrix<f64>,
    widths: Vec<f64>,
}

impl RbfLayout {
    pub fn new(centers: DMatrix<f64>, widths: Vec<f64>) -> Result<Self> {
        let nodes = centers.nrows();
        if nodes == 0 {
            return Err(Error::Parameter {
                name: "rbf node count",
                constraint: ">= 1",
                value: 0.0,
            });
        }
        if widths.len() != nodes {
            return Err(Error::Length {
                context: "rbf widths",
                expected: nodes,
                actual: widths.len(),
            });
        }
        for &b in &widths {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::Parameter {
                    name: "rbf width",
                    constraint: "> 0",
                    value: b,
                });
            }
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::Parameter {
                name: "rbf center",
                constraint: "finite",
                value: f64::NAN,
            });
        }
        Ok(Self {
            input_dim: centers.ncols(),
            centers,
            widths,
        })
    }

    /// Evenly spaced centers on `[lo, hi]`; width equals the grid spacing.
    pub fn grid_1d(lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if nodes < 2 || !(hi > lo) {
            return Err(Error::Parameter {
                name: "rbf 1-d grid",
                constraint: "nodes >= 2 and hi > lo",
                value: nodes as f64,
            });
        }
        let spacing = (hi - lo) / (nodes - 1) as f64;
        let centers = DMatrix::from_fn(nodes, 1, |j, _| lo + spacing * j as f64);
        Self::new(centers, vec![spacing; nodes])
    }

    /// Square grid over `[lo, hi]^2`; width equals the per-axis spacing.
    pub fn grid_2d(lo: f64, hi: f64, per_axis: usize) -> Result<Self> {
        if per_axis < 2 || !(hi > lo) {
            return Err(Error::Parameter {
                name: "rbf 2-d grid",
                constraint: "per_axis >= 2 and hi > lo",
                value: per_axis as f64,
            });
        }
        let spacing = (hi - lo) / (per_axis - 1) as f64;
        let nodes = per_axis * per_axis;
        let centers = DMatrix::from_fn(nodes, 2, |j, axis| {
            let idx = if axis == 0 { j / per_axis } else { j % per_axis };
            lo + spacing * idx as f64
        });
        Self::new(centers, vec![spacing; nodes])
    }

    /// Halton-sequence centers over `[lo, hi]^dim` with a shared width.
    /// `seed` offsets the sequence start, so layouts are reproducible from
    /// config alone.
    pub fn low_discrepancy(
        dim: usize,
        nodes: usize,
        lo: f64,
        hi: f64,
        width: f64,
        seed: u64,
    ) -> Result<Self> {
        if dim == 0 || nodes == 0 || !(hi > lo) || !(width > 0.0) {
            return Err(Error::Parameter {
                name: "rbf low-discrepancy layout",
                constraint: "dim >= 1, nodes >= 1, hi > lo, width > 0",
                value: dim as f64,
            });
        }
        let bases = primes(dim);
        let centers = DMatrix::from_fn(nodes, dim, |j, d| {
            let u = radical_inverse(seed + j as u64 + 1, bases[d]);
            lo + (hi - lo) * u
        });
        Self::new(centers, vec![width; nodes])
    }

    pub fn node_count(&self) -> usize {
        self.centers.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn centers(&self) -> &DMatrix<f64> {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Basis vector at `input`; component `j` is the response of node `j`.
    pub fn basis(&self, input: &[f64]) -> Result<DVector<f64>> {
        if input.len() != self.input_dim {
            return Err(Error::Length {
                context: "rbf input",
                expected: self.input_dim,
                actual: input.len(),
            });
        }
        let nodes = self.node_count();
        let mut out = DVector::zeros(nodes);
        for j in 0..nodes {
            let mut dist_sq = 0.0;
            for d in 0..self.input_dim {
                let diff = input[d] - self.centers[(j, d)];
                dist_sq += diff * diff;
            }
            let b = self.widths[j];
            out[j] = (-dist_sq / (b * b)).exp();
        }
        Ok(out)
    }
}

/// Network output `w . E(input)`.
pub fn approximate(layout: &RbfLayout, weights: &[f64], input: &[f64]) -> Result<f64> {
    if weights.len() != layout.node_count() {
        return Err(Error::Length {
            context: "rbf weights",
            expected: layout.node_count(),
            actual: weights.len(),
        });
    }
    let basis = layout.basis(input)?;
    Ok(weights.iter().zip(basis.iter()).map(|(w, e)| w * e).sum())
}

/// Adaptive law for the network weights: leakage `-h w` plus a correction
/// `-eta * tau_tilde * kappa * E(x_hat_prefix)` driven by the disturbance
/// estimation error. The caller integrates the returned rate.
pub fn weight_update_rate(
    layout: &RbfLayout,
    weights: &[f64],
    x_hat_prefix: &[f64],
    tau_tilde: f64,
    h: f64,
    eta: f64,
    kappa: f64,
) -> Result<DVector<f64>> {
    for (name, value) in [("h", h), ("eta", eta), ("kappa", kappa)] {
        if !(value > 0.0) {
            return Err(Error::Parameter {
                name: match name {
                    "h" => "adaptation leakage h",
                    "eta" => "adaptation gain eta",
                    _ => "disturbance observer gain kappa",
                },
                constraint: "> 0",
                value,
            });
        }
    }
    if weights.len() != layout.node_count() {
        return Err(Error::Length {
            context: "rbf weights",
            expected: layout.node_count(),
            actual: weights.len(),
        });
    }
    let basis = layout.basis(x_hat_prefix)?;
    let mut out = DVector::zeros(weights.len());
    weight_update_rate_into(
        weights,
        basis.as_slice(),
        tau_tilde,
        h,
        eta,
        kappa,
        out.as_mut_slice(),
    );
    Ok(out)
}

/// Same law with a precomputed basis vector; used in the simulation hot loop.
pub fn weight_update_rate_into(
    weights: &[f64],
    basis: &[f64],
    tau_tilde: f64,
    h: f64,
    eta: f64,
    kappa: f64,
    out: &mut [f64],
) {
    let gain = eta * tau_tilde * kappa;
    for ((o, &w), &e) in out.iter_mut().zip(weights).zip(basis) {
        *o = -h * w - gain * e;
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut fraction = 1.0;
    let mut value = 0.0;
    let b = base as f64;
    while i > 0 {
        fraction /= b;
        value += fraction * (i % base) as f64;
        i /= base;
    }
    value
}

fn primes(count: usize) -> Vec<u64> {
    let mut found = Vec::with_capacity(count);
    let mut candidate: u64 = 2;
    while found.len() < count {
        if found.iter().all(|&p| candidate % p != 0) {
            found.push(candidate);
        }
        candidate += 1;
    }
    found
}
