// SPDX-License-Identifier: Apache-2.0

//! Default filter: keep grasps the arm can hold at every task step.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde_json::Value;

use super::registry::{parse_params, GraspFilter};
use super::{derive_seed, GraspCandidate, PlanContext, PlannerError, ProgressEvent, Stage};
use crate::kinematics::{solve_ik_toleranced, IkOptions, JointConfig, KinematicChain, ReachStatus};
use crate::taskmodel::{Grasp, TaskDescription};

pub const NAME: &str = "reachability";

/// Progress is reported after every this many grasps.
const PROGRESS_CHUNK: usize = 32;

pub struct Reachability {
    pub ik: IkOptions,
}

impl Reachability {
    pub fn new(ik: IkOptions) -> Self {
        Reachability { ik }
    }

    pub fn from_params(v: &Value) -> Result<Self, PlannerError> {
        let ik: IkOptions = parse_params(NAME, v)?;
        if !(ik.pos_tol > 0.0 && ik.rot_tol > 0.0 && ik.damping >= 0.0 && ik.max_iterations > 0) {
            return Err(PlannerError::InvalidParams {
                plugin: NAME.into(),
                message: "tolerances and max_iterations must be positive".into(),
            });
        }
        Ok(Self::new(ik))
    }
}

/// Per-step statuses and arm configurations for `grasp`, or `None` when
/// some step is unreachable. Step 0 is seeded from the task's start
/// configuration and each later step from the previous solution.
pub fn reach_all_steps(
    chain: &KinematicChain,
    task: &TaskDescription,
    grasp: &Grasp,
    ik: &IkOptions,
    seed: u64,
    gen_index: usize,
) -> Result<Option<(Vec<ReachStatus>, Vec<JointConfig>)>, PlannerError> {
    let mut ik_seed = task.start_arm_config.clone();
    let mut statuses = Vec::with_capacity(task.steps.len());
    let mut configs = Vec::with_capacity(task.steps.len());
    for (k, step) in task.steps.iter().enumerate() {
        let rng_seed = derive_seed(seed, gen_index as u64, k as u64);
        let Some(sol) = solve_ik_toleranced(chain, &step.pose, &step.tol_pos, &step.tol_rot, &grasp.tcp_in_object, &ik_seed, ik, rng_seed)?
        else {
            return Ok(None);
        };
        statuses.push(sol.status);
        ik_seed = sol.config.clone();
        configs.push(sol.config);
    }
    Ok(Some((statuses, configs)))
}

impl GraspFilter for Reachability {
    fn name(&self) -> &str {
        NAME
    }

    fn filter(&self, grasps: &[Grasp], ctx: &PlanContext<'_>) -> Result<Vec<GraspCandidate>, PlannerError> {
        let done = AtomicUsize::new(0);
        let total = grasps.len().max(1);
        let kept: Vec<Option<GraspCandidate>> = grasps
            .par_iter()
            .enumerate()
            .map(|(i, g)| {
                let out = reach_all_steps(&ctx.chain, ctx.task, g, &self.ik, ctx.seed, i)?.map(|(per_step_status, per_step_config)| {
                    GraspCandidate {
                        grasp: g.clone(),
                        per_step_status,
                        per_step_config,
                        score: 0.0,
                        gen_index: i,
                    }
                });
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n % PROGRESS_CHUNK == 0 {
                    ctx.report(ProgressEvent {
                        stage: Stage::Filter,
                        fraction: n as f64 / total as f64,
                    });
                }
                Ok(out)
            })
            .collect::<Result<_, PlannerError>>()?;
        Ok(kept.into_iter().flatten().collect())
    }
}
