//! Experiment runner for the lane-free ring-road simulator: configuration
//! loading, fundamental-diagram series, single runs with trajectory dumps,
//! and offline safety audits of recorded trajectories.

pub mod audit;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;
pub mod svg;

pub use commands::{cmd_audit, cmd_fd, cmd_run, AuditArgs, FdArgs, Outcome, RunArgs};
pub use config::ExperimentConfig;
pub use error::CliError;
