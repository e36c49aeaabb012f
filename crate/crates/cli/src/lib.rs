//! Scenario runner for the OND toolkit: config files, the scenario catalog
//! and run reports.

pub mod config;
pub mod report;
pub mod scenarios;
