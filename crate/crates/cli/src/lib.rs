//! Command implementations behind the `pvobs` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;

pub mod commands;
pub mod scenario;

pub use commands::{
    cmd_certify, cmd_feasibility_map, cmd_simulate, CertifyReport, MapOutput, SimulationSummary,
};
pub use scenario::{parse_scenario, Overrides, Scenario};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("scenario schema: {0}")]
    Schema(String),
    #[error("invariant violated ({invariant}): {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },
    #[error("invalid input: {0}")]
    Input(String),
    #[error("simulation failed: {0}")]
    Runtime(#[from] pvobs_core::Error),
    #[error("cannot write {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. }
            | CliError::Schema(_)
            | CliError::Invariant { .. }
            | CliError::Input(_) => EXIT_INPUT,
            CliError::Runtime(_) | CliError::Output { .. } => EXIT_RUNTIME,
        }
    }
}
