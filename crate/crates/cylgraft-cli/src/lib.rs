//! Verification suites behind the `cylgraft` binary.
//!
//! Each subcommand reads its section of a TOML run config, evaluates a set of named
//! inequalities and writes `report.json` plus CSV tables. Exit codes: 0 when every
//! asserted record passes, 1 on a failed check or solver failure, 2 on usage or
//! config errors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;
pub mod report;
pub mod series;

pub use commands::{run_command, Command, Context};
pub use config::RunConfig;
pub use output::{write_output, Output, Table};
pub use report::{Record, Report, Summary};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

/// Exit code for a finished report.
pub fn report_exit_code(report: &Report) -> i32 {
    if report.all_pass() {
        0
    } else {
        1
    }
}
