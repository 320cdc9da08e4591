//! Experiment harness: configuration parsing, subcommand implementations,
//! artifact emission and the acceptance-suite runner.

pub mod accept;
pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

pub use commands::{
    cmd_bracket, cmd_capacity, cmd_mc_verify, cmd_solve, cmd_stability, RunSummary,
};
pub use config::RunConfig;
pub use error::CmdError;
