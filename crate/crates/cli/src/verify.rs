// SPDX-License-Identifier: Apache-2.0

//! Fixture regression suites.

use std::path::{Path, PathBuf};

use graspforge_core::kinematics::ReachStatus;
use graspforge_core::planner::{PlanOptions, Planner, PluginRegistry};
use serde::{Deserialize, Serialize};

use crate::args::VerifyArgs;
use crate::inputs::{load_config, load_robot, load_task, read, resolve};
use crate::report::status_label;
use crate::{CliError, Exit};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub fixtures: Vec<FixtureSpec>,
}

/// One planning run and what its result must satisfy.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSpec {
    pub name: String,
    pub robot: PathBuf,
    pub task: PathBuf,
    #[serde(default)]
    pub config: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub min_candidates: usize,
    #[serde(default)]
    pub max_candidates: Option<usize>,
    /// Every step status of every candidate must be one of these.
    #[serde(default)]
    pub allowed_status: Option<Vec<ReachStatus>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(String),
    Error(String),
}

#[derive(Clone, Debug)]
pub struct Row {
    pub name: String,
    pub candidates: Option<usize>,
    pub verdict: Verdict,
}

pub fn load_suite(path: &Path) -> Result<Suite, CliError> {
    graspforge_core::from_json(&read(path)?).map_err(|message| CliError::Suite {
        path: path.to_path_buf(),
        message,
    })
}

fn check(spec: &FixtureSpec, steps: usize, statuses: &[Vec<ReachStatus>]) -> Verdict {
    let n = statuses.len();
    if n < spec.min_candidates {
        return Verdict::Fail(format!("{n} candidates, expected at least {}", spec.min_candidates));
    }
    if let Some(max) = spec.max_candidates {
        if n > max {
            return Verdict::Fail(format!("{n} candidates, expected at most {max}"));
        }
    }
    for (i, s) in statuses.iter().enumerate() {
        if s.len() != steps {
            return Verdict::Fail(format!("candidate {i} has {} statuses for {steps} steps", s.len()));
        }
        if let Some(allowed) = &spec.allowed_status {
            if let Some(bad) = s.iter().find(|st| !allowed.contains(st)) {
                return Verdict::Fail(format!("candidate {i} has status {}", status_label(*bad)));
            }
        }
    }
    Verdict::Pass
}

fn run_fixture(spec: &FixtureSpec, base: Option<&Path>, jobs: usize) -> Row {
    let attempt = || -> Result<Row, CliError> {
        let robot = load_robot(&resolve(base, &spec.robot))?;
        let task = load_task(&resolve(base, &spec.task), &robot)?;
        let config_path = spec.config.as_ref().map(|c| resolve(base, c));
        let config = load_config(config_path.as_deref(), None)?;
        let planner = Planner::new(&config, &PluginRegistry::with_builtins()).map_err(CliError::from_planner)?;
        let opts = PlanOptions {
            seed: spec.seed,
            jobs,
            progress: None,
        };
        let out = planner.plan(&task, &robot, &opts).map_err(CliError::from_planner)?;
        let statuses: Vec<Vec<ReachStatus>> = out.candidates.iter().map(|c| c.per_step_status.clone()).collect();
        Ok(Row {
            name: spec.name.clone(),
            candidates: Some(statuses.len()),
            verdict: check(spec, task.steps.len(), &statuses),
        })
    };
    attempt().unwrap_or_else(|e| Row {
        name: spec.name.clone(),
        candidates: None,
        verdict: Verdict::Error(e.to_string()),
    })
}

pub fn run_suite(suite: &Suite, base: Option<&Path>, jobs: usize) -> Vec<Row> {
    suite.fixtures.iter().map(|f| run_fixture(f, base, jobs)).collect()
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Exit, CliError> {
    let suite = load_suite(&args.suite)?;
    if suite.fixtures.is_empty() {
        eprintln!("warning: 0 fixtures in {}", args.suite.display());
        return Ok(Exit::Success);
    }
    let rows = run_suite(&suite, args.suite.parent(), usize::from(args.jobs));
    println!("fixture\tcandidates\tresult\tdetail");
    for r in &rows {
        let count = r.candidates.map_or("-".to_string(), |n| n.to_string());
        let (result, detail) = match &r.verdict {
            Verdict::Pass => ("pass", ""),
            Verdict::Fail(d) => ("FAIL", d.as_str()),
            Verdict::Error(d) => ("ERROR", d.as_str()),
        };
        println!("{}\t{count}\t{result}\t{detail}", r.name);
    }
    let passed = rows.iter().filter(|r| r.verdict == Verdict::Pass).count();
    println!("{passed}/{} fixtures passed", rows.len());
    Ok(if rows.iter().any(|r| matches!(r.verdict, Verdict::Error(_))) {
        Exit::Error
    } else if passed == rows.len() {
        Exit::Success
    } else {
        Exit::Empty
    })
}
