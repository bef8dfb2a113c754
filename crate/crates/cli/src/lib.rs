//! Scenario ingestion, run/compare/diagnose commands, and artifact emission
//! for the event-triggered consensus tracking simulator.

pub mod config;
pub mod diagnose;
pub mod output;
pub mod plot;
pub mod report;
