// SPDX-License-Identifier: Apache-2.0

//! `graspforge` command implementations.

pub mod args;
pub mod cache_cmd;
pub mod inputs;
pub mod plan;
pub mod report;
pub mod serve;
pub mod verify;

use std::path::PathBuf;

use graspforge_core::kinematics::KinematicsError;
use graspforge_core::planner::PlannerError;
use graspforge_core::taskmodel::TaskError;
use thiserror::Error;

pub use args::{Cli, Command};

/// Process exit status.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Error = 1,
    /// Valid input, empty or failing result.
    Empty = 2,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid robot description {path}: {source}")]
    Robot {
        path: PathBuf,
        source: KinematicsError,
    },
    #[error("invalid task {path}: {source}")]
    Task { path: PathBuf, source: TaskError },
    #[error("invalid planner config {path}: {source}")]
    Config { path: PathBuf, source: PlannerError },
    #[error("plugin error: {0}")]
    Plugin(PlannerError),
    #[error("planning failed: {0}")]
    Planner(PlannerError),
    #[error("cache: {0}")]
    Cache(String),
    #[error("invalid suite {path}: {message}")]
    Suite { path: PathBuf, message: String },
    #[error("server: {0}")]
    Server(String),
}

impl CliError {
    /// Sorts a planner error into plugin-configuration and runtime failures.
    pub fn from_planner(e: PlannerError) -> Self {
        match e {
            PlannerError::UnknownPlugin { .. } | PlannerError::DuplicatePlugin { .. } | PlannerError::InvalidParams { .. } => {
                CliError::Plugin(e)
            }
            other => CliError::Planner(other),
        }
    }
}

pub fn run(cli: Cli) -> Result<Exit, CliError> {
    match cli.command {
        Command::Plan(a) => plan::cmd_plan(&a),
        Command::Cache(a) => cache_cmd::cmd_cache(&a),
        Command::Verify(a) => verify::cmd_verify(&a),
        Command::Serve(a) => serve::cmd_serve(&a),
    }
}
