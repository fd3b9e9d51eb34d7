//! Config-driven experiment runner for `colombeau-core`.

pub mod app;
pub mod config;
pub mod report;
pub mod runner;
