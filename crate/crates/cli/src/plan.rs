// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use graspforge_core::planner::{grasp_list, PlanOptions, PlanOutput, Planner, PluginRegistry};

use crate::args::PlanArgs;
use crate::inputs::{load_config, load_robot, load_task};
use crate::report::PlanReport;
use crate::{CliError, Exit};

/// Loads the inputs named by `args` and runs the planner once.
pub fn run_plan(args: &PlanArgs) -> Result<PlanOutput, CliError> {
    let robot = load_robot(&args.robot)?;
    let task = load_task(&args.task, &robot)?;
    let config = load_config(args.config.as_deref(), args.cache_dir.as_deref())?;
    let planner = Planner::new(&config, &PluginRegistry::with_builtins()).map_err(CliError::from_planner)?;
    let opts = PlanOptions {
        seed: args.seed,
        jobs: usize::from(args.jobs),
        progress: None,
    };
    let out = planner.plan(&task, &robot, &opts).map_err(CliError::from_planner)?;
    for w in &out.cache_warnings {
        log::warn!("{w}");
    }
    if let Some(old) = &out.cache_overwrite {
        log::warn!(
            "replaced cache entry generated by {} ({})",
            old.generator,
            old.params_hash
        );
    }
    Ok(out)
}

fn is_tsv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("tsv"))
}

pub fn cmd_plan(args: &PlanArgs) -> Result<Exit, CliError> {
    let out = run_plan(args)?;
    let report = PlanReport::new(&out, args.top);
    if let Some(path) = &args.out {
        let text = if is_tsv(path) {
            report.tsv()
        } else {
            let mut json = serde_json::to_string_pretty(&grasp_list(&out.candidates, args.top)).expect("grasp list serializes");
            json.push('\n');
            json
        };
        std::fs::write(path, text).map_err(|source| CliError::Write {
            path: path.clone(),
            source,
        })?;
    }
    print!("{}", report.table());
    Ok(if out.candidates.is_empty() { Exit::Empty } else { Exit::Success })
}
