//! Scenario configs, figure CSV and scenario runner behind the `periclock` binary.

pub mod config;
pub mod figures;
pub mod scenario;
