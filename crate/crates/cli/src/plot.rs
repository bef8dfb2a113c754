//! SVG plots of a run: follower outputs against the reference, consensus
//! error trajectories, and per-follower inter-event interval stems.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;

use evcon_core::{Scenario, TrajectoryLog};

const SIZE: (u32, u32) = (900, 540);

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = 0.05 * (hi - lo).max(1e-9);
    (lo - pad, hi + pad)
}

/// Follower outputs and the leader reference over time.
pub fn outputs_vs_reference(log: &TrajectoryLog, scenario: &Scenario, path: &Path) -> Result<()> {
    let reference: Vec<(f64, f64)> = log
        .times
        .iter()
        .map(|&t| (t, scenario.reference.y_r(t)))
        .collect();
    let y_range = padded_range(
        log.agents
            .iter()
            .flat_map(|a| a.x[0].iter().copied())
            .chain(reference.iter().map(|&(_, y)| y)),
    );
    let t_end = *log.times.last().unwrap_or(&1.0);

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .caption("Consensus tracking", ("sans-serif", 22))
        .x_label_area_size(40)
        .y_label_area_size(56)
        .build_cartesian_2d(0.0..t_end, y_range.0..y_range.1)
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .configure_mesh()
        .x_desc("time [s]")
        .y_desc("output")
        .draw()
        .map_err(|e| anyhow!("{e}"))?;

    for (i, agent) in log.agents.iter().enumerate() {
        let color = Palette99::pick(i).mix(0.9);
        chart
            .draw_series(LineSeries::new(
                log.times.iter().copied().zip(agent.x[0].iter().copied()),
                color.stroke_width(1),
            ))
            .map_err(|e| anyhow!("{e}"))?
            .label(format!("follower {}", i + 1))
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 16, y)], Palette99::pick(i).mix(0.9))
            });
    }
    chart
        .draw_series(LineSeries::new(reference, BLACK.stroke_width(2)))
        .map_err(|e| anyhow!("{e}"))?
        .label("leader reference")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLACK.stroke_width(2)));
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.85))
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    root.present().map_err(|e| anyhow!("{e}"))?;
    Ok(())
}

/// Consensus error trajectories, one line per follower.
pub fn tracking_errors(log: &TrajectoryLog, path: &Path) -> Result<()> {
    let y_range = padded_range(log.agents.iter().flat_map(|a| a.z[0].iter().copied()));
    let t_end = *log.times.last().unwrap_or(&1.0);

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .caption("Consensus errors", ("sans-serif", 22))
        .x_label_area_size(40)
        .y_label_area_size(56)
        .build_cartesian_2d(0.0..t_end, y_range.0..y_range.1)
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .configure_mesh()
        .x_desc("time [s]")
        .y_desc("z1")
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    for (i, agent) in log.agents.iter().enumerate() {
        chart
            .draw_series(LineSeries::new(
                log.times.iter().copied().zip(agent.z[0].iter().copied()),
                Palette99::pick(i).mix(0.9).stroke_width(1),
            ))
            .map_err(|e| anyhow!("{e}"))?
            .label(format!("follower {}", i + 1))
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 16, y)], Palette99::pick(i).mix(0.9))
            });
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.85))
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    root.present().map_err(|e| anyhow!("{e}"))?;
    Ok(())
}

/// Stem plot of inter-event intervals for one follower: a stem at each event
/// time whose height is the gap since the previous event.
pub fn event_intervals(log: &TrajectoryLog, agent: usize, path: &Path) -> Result<()> {
    let times: Vec<f64> = log
        .events
        .iter()
        .filter(|e| e.agent == agent)
        .map(|e| e.time)
        .collect();
    let stems: Vec<(f64, f64)> = times
        .windows(2)
        .map(|pair| (pair[1], pair[1] - pair[0]))
        .collect();
    let max_interval = stems.iter().map(|&(_, h)| h).fold(1e-9, f64::max);
    let t_end = *log.times.last().unwrap_or(&1.0);

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(16)
        .caption(
            format!("Event intervals, follower {}", agent + 1),
            ("sans-serif", 22),
        )
        .x_label_area_size(40)
        .y_label_area_size(56)
        .build_cartesian_2d(0.0..t_end, 0.0..max_interval * 1.1)
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .configure_mesh()
        .x_desc("event time [s]")
        .y_desc("interval [s]")
        .draw()
        .map_err(|e| anyhow!("{e}"))?;
    let color = Palette99::pick(agent).mix(0.9);
    chart
        .draw_series(
            stems
                .iter()
                .map(|&(t, h)| PathElement::new(vec![(t, 0.0), (t, h)], color.stroke_width(1))),
        )
        .map_err(|e| anyhow!("{e}"))?;
    chart
        .draw_series(
            stems
                .iter()
                .map(|&(t, h)| Circle::new((t, h), 2, color.filled())),
        )
        .map_err(|e| anyhow!("{e}"))?;
    root.present().map_err(|e| anyhow!("{e}"))?;
    Ok(())
}
