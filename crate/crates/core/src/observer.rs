//! Luenberger-style state observer, auxiliary-variable disturbance observer,
//! and the Lyapunov-equation diagnostic for the observer matrix.
//!
//! The observer matrix is in companion form: first column `-q`, identity on
//! the superdiagonal. Construction rejects any gain vector that fails the
//! Hurwitz test. The disturbance observer tracks the auxiliary variable
//! `tau = varpi - kappa * x`; its estimate of the disturbance is always the
//! derived quantity `varpi_hat = tau_hat + kappa * x_hat`, never stored.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Observer gain set: output-injection gains `q`, disturbance observer gains
/// `kappa`, and the companion matrix assembled from `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGains {
    q: Vec<f64>,
    kappa: Vec<f64>,
    p: DMatrix<f64>,
}

impl ObserverGains {
    /// Requires `kappa > 3/2` per level (the closed-loop damping terms carry a
    /// factor `(3 - 2 kappa)/2` that must be negative) and a Hurwitz companion
    /// matrix.
    pub fn new(q: &[f64], kappa: &[f64]) -> Result<Self> {
        let n = q.len();
        if n == 0 {
            return Err(Error::Parameter {
                name: "observer order",
                constraint: ">= 1",
                value: 0.0,
            });
        }
        if kappa.len() != n {
            return Err(Error::Length {
                context: "observer kappa gains",
                expected: n,
                actual: kappa.len(),
            });
        }
        for &k in kappa {
            if !(k > 1.5) {
                return Err(Error::Parameter {
                    name: "kappa",
                    constraint: "> 3/2",
                    value: k,
                });
            }
        }
        for &g in q {
            if !g.is_finite() {
                return Err(Error::Parameter {
                    name: "q",
                    constraint: "finite",
                    value: g,
                });
            }
        }
        let p = companion(q);
        check_hurwitz(&p)?;
        Ok(Self {
            q: q.to_vec(),
            kappa: kappa.to_vec(),
            p,
        })
    }

    pub fn order(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    /// The companion observer matrix.
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }
}

/// Companion matrix with `-q` in the first column and identity on the
/// superdiagonal.
pub fn companion(q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    let mut p = DMatrix::zeros(n, n);
    for (k, &g) in q.iter().enumerate() {
        p[(k, 0)] = -g;
    }
    for k in 0..n.saturating_sub(1) {
        p[(k, k + 1)] = 1.0;
    }
    p
}

/// True when every eigenvalue has a strictly negative real part.
pub fn is_hurwitz(m: &DMatrix<f64>) -> bool {
    check_hurwitz(m).is_ok()
}

fn check_hurwitz(m: &DMatrix<f64>) -> Result<()> {
    for eig in m.complex_eigenvalues().iter() {
        if eig.re >= 0.0 {
            return Err(Error::NotHurwitz {
                real: eig.re,
                imag: eig.im,
            });
        }
    }
    Ok(())
}

/// Estimated state and auxiliary disturbance variable for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub x_hat: DVector<f64>,
    pub tau_hat: DVector<f64>,
}

impl ObserverState {
    pub fn new(x_hat: Vec<f64>, tau_hat: Vec<f64>) -> Result<Self> {
        if x_hat.len() != tau_hat.len() {
            return Err(Error::Length {
                context: "observer state",
                expected: x_hat.len(),
                actual: tau_hat.len(),
            });
        }
        Ok(Self {
            x_hat: DVector::from_vec(x_hat),
            tau_hat: DVector::from_vec(tau_hat),
        })
    }

    /// Disturbance estimate `tau_hat + kappa .* x_hat`, derived on demand.
    pub fn varpi_hat(&self, gains: &ObserverGains) -> DVector<f64> {
        DVector::from_fn(self.x_hat.len(), |l, _| {
            self.tau_hat[l] + gains.kappa()[l] * self.x_hat[l]
        })
    }
}

/// State observer derivative. Level `k` advances by the next estimated state
/// (the control input at the last level), the network output `f_hat`, the
/// output-error injection `q_k (y - x_hat_1)`, and the disturbance estimate.
pub fn observer_derivative(
    gains: &ObserverGains,
    x_hat: &[f64],
    tau_hat: &[f64],
    y: f64,
    u: f64,
    f_hat: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let n = gains.order();
    check_observer_slices(n, x_hat, tau_hat, f_hat)?;
    let psi1 = y - x_hat[0];
    for k in 0..n {
        let feed = if k + 1 < n { x_hat[k + 1] } else { u };
        let varpi = tau_hat[k] + gains.kappa[k] * x_hat[k];
        out[k] = feed + f_hat[k] + gains.q[k] * psi1 + varpi;
        if !out[k].is_finite() {
            return Err(Error::NonFinite {
                what: "observer derivative",
                level: k + 1,
            });
        }
    }
    Ok(())
}

/// Auxiliary-variable derivative of the disturbance observer:
/// `-kappa_l (f_hat_l + tau_hat_l + kappa_l x_hat_l + next_l)` where `next`
/// is the next estimated state, or the control input at the last level.
pub fn disturbance_observer_derivative(
    gains: &ObserverGains,
    x_hat: &[f64],
    tau_hat: &[f64],
    f_hat: &[f64],
    u: f64,
    out: &mut [f64],
) -> Result<()> {
    let n = gains.order();
    check_observer_slices(n, x_hat, tau_hat, f_hat)?;
    for l in 0..n {
        let next = if l + 1 < n { x_hat[l + 1] } else { u };
        let kappa = gains.kappa[l];
        out[l] = -kappa * (f_hat[l] + tau_hat[l] + kappa * x_hat[l] + next);
        if !out[l].is_finite() {
            return Err(Error::NonFinite {
                what: "disturbance observer derivative",
                level: l + 1,
            });
        }
    }
    Ok(())
}

fn check_observer_slices(n: usize, x_hat: &[f64], tau_hat: &[f64], f_hat: &[f64]) -> Result<()> {
    for (context, slice) in [
        ("observer x_hat", x_hat),
        ("observer tau_hat", tau_hat),
        ("observer f_hat", f_hat),
    ] {
        if slice.len() != n {
            return Err(Error::Length {
                context,
                expected: n,
                actual: slice.len(),
            });
        }
    }
    Ok(())
}

/// Solution of the observer Lyapunov equation.
#[derive(Debug, Clone)]
pub struct LyapunovSolution {
    pub f: DMatrix<f64>,
    pub residual: f64,
    pub min_eigenvalue: f64,
}

/// Solves `P^T F + F P = -2 H` for a Hurwitz `P` and symmetric positive
/// definite `H` via the Kronecker-product linear system. The result is
/// symmetrized and must be positive definite with max-norm residual below
/// 1e-9.
pub fn lyapunov_diagnostic(p: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<LyapunovSolution> {
    let n = p.nrows();
    if p.ncols() != n || h.nrows() != n || h.ncols() != n {
        return Err(Error::Length {
            context: "lyapunov matrices",
            expected: n,
            actual: h.nrows(),
        });
    }
    check_hurwitz(p)?;
    let asym = (h - h.transpose()).abs().max();
    if asym > 1e-12 * (1.0 + h.abs().max()) {
        return Err(Error::NotPositiveDefinite("H"));
    }
    if h.clone().symmetric_eigenvalues().iter().any(|&e| e <= 0.0) {
        return Err(Error::NotPositiveDefinite("H"));
    }

    // vec(P^T F) = (I (x) P^T) vec(F), vec(F P) = (P^T (x) I) vec(F).
    let identity = DMatrix::<f64>::identity(n, n);
    let pt = p.transpose();
    let system = identity.kronecker(&pt) + pt.kronecker(&identity);
    let rhs = DVector::from_column_slice((-2.0 * h).as_slice());
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::NotPositiveDefinite("F"))?;
    let raw = DMatrix::from_column_slice(n, n, solution.as_slice());
    let f = (&raw + raw.transpose()) * 0.5;

    let residual = (pt * &f + &f * p + 2.0 * h).abs().max();
    if !(residual < 1e-9) {
        return Err(Error::Parameter {
            name: "lyapunov residual",
            constraint: "< 1e-9",
            value: residual,
        });
    }
    let min_eigenvalue = f
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(min_eigenvalue > 0.0) {
        return Err(Error::NotPositiveDefinite("F"));
    }
    Ok(LyapunovSolution {
        f,
        residual,
        min_eigenvalue,
    })
}
