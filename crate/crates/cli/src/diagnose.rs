//! Offline configuration diagnostics: the observer Hurwitz test, the
//! Lyapunov-equation solve, and the gain side conditions. Works on the raw
//! scenario file so that a failing value is reported as a diagnostic rather
//! than rejected at construction.

use std::fmt::Write as _;

use evcon_core::observer::{companion, lyapunov_diagnostic};
use nalgebra::DMatrix;

use crate::config::ScenarioFile;

pub struct DiagnosticReport {
    pub lines: Vec<(bool, String)>,
}

impl DiagnosticReport {
    pub fn all_passed(&self) -> bool {
        self.lines.iter().all(|(ok, _)| *ok)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (ok, line) in &self.lines {
            let _ = writeln!(out, "[{}] {}", if *ok { "PASS" } else { "FAIL" }, line);
        }
        let _ = writeln!(
            out,
            "diagnostics: {}",
            if self.all_passed() { "all passed" } else { "FAILED" }
        );
        out
    }
}

pub fn diagnose(file: &ScenarioFile) -> DiagnosticReport {
    let mut lines = Vec::new();

    // Observer matrix spectrum.
    let p = companion(&file.observer.q);
    let eigenvalues = p.complex_eigenvalues();
    let hurwitz = eigenvalues.iter().all(|e| e.re < 0.0);
    let spectrum: Vec<String> = eigenvalues
        .iter()
        .map(|e| format!("{:.6}{:+.6}i", e.re, e.im))
        .collect();
    lines.push((
        hurwitz,
        format!(
            "observer matrix Hurwitz: q = {:?}, eigenvalues [{}]",
            file.observer.q,
            spectrum.join(", ")
        ),
    ));

    // Lyapunov solve with H = I.
    if hurwitz {
        let h = DMatrix::identity(p.nrows(), p.ncols());
        match lyapunov_diagnostic(&p, &h) {
            Ok(sol) => lines.push((
                sol.min_eigenvalue > 0.0 && sol.residual < 1e-9,
                format!(
                    "lyapunov solve: min eigenvalue {:.3e}, residual {:.3e}",
                    sol.min_eigenvalue, sol.residual
                ),
            )),
            Err(err) => lines.push((false, format!("lyapunov solve failed: {err}"))),
        }
    } else {
        lines.push((false, "lyapunov solve skipped: matrix not Hurwitz".into()));
    }

    // Gain side conditions.
    let order = file.observer.q.len();
    let kappa = file
        .observer
        .kappa
        .clone()
        .unwrap_or_else(|| vec![2.0; order]);
    let kappa_ok = kappa.iter().all(|&k| k > 1.5);
    lines.push((kappa_ok, format!("kappa > 3/2 per level: {kappa:?}")));

    let r_ok = file.controller.r.iter().all(|&r| r < 0.0);
    lines.push((r_ok, format!("feedback gains r < 0: {:?}", file.controller.r)));

    let pi = file.trigger.pi.unwrap_or(2.5);
    let pi_bar = file.trigger.pi_bar.unwrap_or(4.0);
    lines.push((
        pi_bar > pi,
        format!("fixed candidate magnitude: pi_bar = {pi_bar} > pi = {pi}"),
    ));

    let delta = file.trigger.delta.unwrap_or(0.245);
    let pi_star = file.trigger.pi_star.unwrap_or(2.0);
    let pi_bar_star = file.trigger.pi_bar_star.unwrap_or(4.0);
    let delta_ok = delta > 0.0 && delta < 1.0;
    lines.push((delta_ok, format!("relative slope: delta = {delta} in (0, 1)")));
    let rel_ok = delta_ok && pi_bar_star > pi_star / (1.0 - delta);
    lines.push((
        rel_ok,
        format!(
            "relative candidate magnitude: pi_bar_star = {pi_bar_star} > pi_star/(1-delta) = {:.4}",
            if delta_ok { pi_star / (1.0 - delta) } else { f64::NAN }
        ),
    ));

    let m_ok = file.controller.m.iter().all(|&m| m > 0.0);
    lines.push((m_ok, format!("filter constants m > 0: {:?}", file.controller.m)));

    DiagnosticReport { lines }
}
