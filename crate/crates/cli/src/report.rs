//! Comparison report: per-follower trigger counts per strategy, switch splits,
//! minimum inter-event intervals, and tail tracking quality.

use std::fmt::Write as _;

use serde_json::json;

use evcon_core::{ComparisonReport, Strategy};

use crate::output::metrics_json;

fn entry<'a>(
    report: &'a ComparisonReport,
    strategy: Strategy,
) -> Option<&'a evcon_core::simulator::ComparisonEntry> {
    report.entries.iter().find(|e| e.strategy == strategy)
}

/// Renders the comparison as a text table, one follower per row, one strategy
/// per column. Switch cells are shown as "total(relative+fixed)".
pub fn comparison_text(report: &ComparisonReport) -> String {
    let n_agents = report
        .entries
        .first()
        .map_or(0, |e| e.metrics.agents.len());
    let mut out = String::new();
    let _ = writeln!(out, "Trigger counts per follower (t = 0 initialization included)");
    let _ = writeln!(
        out,
        "{:<12} {:>16} {:>20} {:>20} {:>12}",
        "", "fixed", "switch", "relative", "periodic"
    );
    for i in 0..n_agents {
        let fixed = entry(report, Strategy::Fixed)
            .map_or("-".into(), |e| e.metrics.agents[i].events_total.to_string());
        let switch = entry(report, Strategy::Switch).map_or("-".into(), |e| {
            let a = &e.metrics.agents[i];
            format!(
                "{}({}+{})",
                a.events_total, a.events_relative_branch, a.events_fixed_branch
            )
        });
        let relative = entry(report, Strategy::Relative)
            .map_or("-".into(), |e| e.metrics.agents[i].events_total.to_string());
        let periodic = entry(report, Strategy::Periodic)
            .map_or("-".into(), |e| e.metrics.agents[i].events_total.to_string());
        let _ = writeln!(
            out,
            "{:<12} {:>16} {:>20} {:>20} {:>12}",
            format!("follower {}", i + 1),
            fixed,
            switch,
            relative,
            periodic
        );
    }
    if let Some(periodic) = entry(report, Strategy::Periodic) {
        let updates = periodic.metrics.agents[0].events_total.saturating_sub(1);
        let _ = writeln!(
            out,
            "sample-data baseline: {updates} updates per follower after initialization"
        );
    }

    let _ = writeln!(out);
    let _ = writeln!(out, "Minimum inter-event interval [s]");
    for i in 0..n_agents {
        let mut row = format!("{:<12}", format!("follower {}", i + 1));
        for strategy in [
            Strategy::Fixed,
            Strategy::Switch,
            Strategy::Relative,
            Strategy::Periodic,
        ] {
            let cell = entry(report, strategy).map_or("-".into(), |e| {
                e.metrics.agents[i]
                    .min_interval
                    .map_or("n/a".into(), |v| format!("{v:.4}"))
            });
            let _ = write!(row, " {cell:>16}");
        }
        let _ = writeln!(out, "{row}");
    }

    let _ = writeln!(out);
    let _ = writeln!(out, "Tail tracking RMS of z1");
    for i in 0..n_agents {
        let mut row = format!("{:<12}", format!("follower {}", i + 1));
        for strategy in [
            Strategy::Fixed,
            Strategy::Switch,
            Strategy::Relative,
            Strategy::Periodic,
        ] {
            let cell = entry(report, strategy).map_or("-".into(), |e| {
                format!("{:.5}", e.metrics.agents[i].tail_rms_z1)
            });
            let _ = write!(row, " {cell:>16}");
        }
        let _ = writeln!(out, "{row}");
    }

    let _ = writeln!(out);
    let ordering = ordering_satisfied(report);
    let _ = writeln!(
        out,
        "per-follower ordering relative <= switch <= fixed: {}",
        if ordering.iter().all(|&ok| ok) {
            "PASS".to_string()
        } else {
            let failing: Vec<String> = ordering
                .iter()
                .enumerate()
                .filter(|(_, ok)| !**ok)
                .map(|(i, _)| format!("follower {}", i + 1))
                .collect();
            format!("FAIL ({})", failing.join(", "))
        }
    );
    out
}

/// Per-follower check of count(relative) <= count(switch) <= count(fixed).
pub fn ordering_satisfied(report: &ComparisonReport) -> Vec<bool> {
    let (fixed, switch, relative) = match (
        entry(report, Strategy::Fixed),
        entry(report, Strategy::Switch),
        entry(report, Strategy::Relative),
    ) {
        (Some(f), Some(s), Some(r)) => (f, s, r),
        _ => return Vec::new(),
    };
    (0..fixed.metrics.agents.len())
        .map(|i| {
            let f = fixed.metrics.agents[i].events_total;
            let s = switch.metrics.agents[i].events_total;
            let r = relative.metrics.agents[i].events_total;
            r <= s && s <= f
        })
        .collect()
}

pub fn comparison_json(report: &ComparisonReport) -> serde_json::Value {
    json!({
        "entries": report.entries.iter()
            .map(|e| metrics_json(e.strategy, &e.metrics))
            .collect::<Vec<_>>(),
        "ordering_relative_switch_fixed": ordering_satisfied(report),
    })
}
