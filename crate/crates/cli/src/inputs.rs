// SPDX-License-Identifier: Apache-2.0

//! Loading robot, task and planner configuration files.

use std::path::{Path, PathBuf};

use graspforge_core::kinematics::RobotModel;
use graspforge_core::planner::{CacheMode, PlannerConfig};
use graspforge_core::taskmodel::{parse_task, TaskDescription};

use crate::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_robot(path: &Path) -> Result<RobotModel, CliError> {
    RobotModel::from_json(&read(path)?).map_err(|source| CliError::Robot {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_task(path: &Path, robot: &RobotModel) -> Result<TaskDescription, CliError> {
    parse_task(&read(path)?, path.parent(), robot).map_err(|source| CliError::Task {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads `path` (defaults when `None`). A cache directory replaces the
/// configured cache mode.
pub fn load_config(path: Option<&Path>, cache_dir: Option<&Path>) -> Result<PlannerConfig, CliError> {
    let mut config = match path {
        Some(p) => PlannerConfig::from_json(&read(p)?).map_err(|source| CliError::Config {
            path: p.to_path_buf(),
            source,
        })?,
        None => PlannerConfig::default(),
    };
    if let Some(dir) = cache_dir {
        config.cache = CacheMode::Disk { dir: dir.to_path_buf() };
    }
    Ok(config)
}

/// `path` relative to `base` unless absolute.
pub fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.to_path_buf(),
    }
}
