// SPDX-License-Identifier: Apache-2.0

//! Generator → filter → evaluator grasp planning with a generator cache.

pub mod antipodal;
pub mod cache;
pub mod epsilon;
pub mod evaluate;
pub mod filter;
pub mod registry;
pub mod surface;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::GeometryError;
use crate::kinematics::{JointConfig, KinematicChain, KinematicsError, ReachStatus, RobotModel};
use crate::pose::PoseDoc;
use crate::taskmodel::{validate_against, Grasp, GraspList, GraspRecord, StepStatusRecord, TaskDescription, TaskError};

pub use cache::{CacheEntry, CacheKey, CacheMode, GraspCache, Provenance, PutOutcome};
pub use epsilon::{force_closure_epsilon, primitive_wrenches, ContactPoint, ContactSet};
pub use registry::{GraspEvaluator, GraspFilter, GraspGenerator, PluginKind, PluginRegistry};

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("unknown {kind} plugin {name:?}; registered: {available:?}")]
    UnknownPlugin {
        kind: PluginKind,
        name: String,
        available: Vec<String>,
    },
    #[error("{kind} plugin {name:?} is already registered")]
    DuplicatePlugin { kind: PluginKind, name: String },
    #[error("invalid parameters for {plugin}: {message}")]
    InvalidParams { plugin: String, message: String },
    #[error("invalid planner config: {0}")]
    Config(String),
    #[error("grasp cache: {0}")]
    Cache(String),
    #[error("evaluator returned {got} scores for {expected} candidates")]
    ScoreCount { expected: usize, got: usize },
    #[error("evaluator returned a non-finite score for candidate {0}")]
    NonFiniteScore(usize),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// A grasp that survived filtering, with its per-step reachability.
#[derive(Clone, Debug, PartialEq)]
pub struct GraspCandidate {
    pub grasp: Grasp,
    pub per_step_status: Vec<ReachStatus>,
    /// Arm configuration found at each step.
    pub per_step_config: Vec<JointConfig>,
    pub score: f64,
    /// Position in the generator output.
    pub gen_index: usize,
}

impl GraspCandidate {
    pub fn record(&self) -> GraspRecord {
        GraspRecord {
            tcp_in_object: PoseDoc::from(&self.grasp.tcp_in_object),
            finger_config: self.grasp.finger_config.clone(),
            ee_name: self.grasp.ee_name.clone(),
            score: self.score,
            per_step: self.per_step_status.iter().map(|&status| StepStatusRecord { status }).collect(),
        }
    }
}

/// Grasp output document for the first `top` candidates (all when `None`).
pub fn grasp_list(candidates: &[GraspCandidate], top: Option<usize>) -> GraspList {
    let n = top.unwrap_or(candidates.len()).min(candidates.len());
    GraspList {
        grasps: candidates[..n].iter().map(GraspCandidate::record).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PluginSpec {
    pub name: String,
    #[serde(default)]
    pub params: Value,
}

impl PluginSpec {
    pub fn named(name: &str) -> Self {
        PluginSpec {
            name: name.into(),
            params: Value::Null,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub generator: PluginSpec,
    pub filter: PluginSpec,
    pub evaluator: PluginSpec,
    pub cache: CacheMode,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            generator: PluginSpec::named(surface::NAME),
            filter: PluginSpec::named(filter::NAME),
            evaluator: PluginSpec::named(evaluate::COMBINED),
            cache: CacheMode::Memory,
        }
    }
}

impl PlannerConfig {
    pub fn from_json(text: &str) -> Result<Self, PlannerError> {
        crate::from_json(text).map_err(PlannerError::Config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generate,
    Filter,
    Evaluate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressEvent {
    pub stage: Stage,
    /// Fraction of the stage completed, in [0, 1].
    pub fraction: f64,
}

pub type ProgressFn = Arc<dyn Fn(ProgressEvent) + Send + Sync>;

/// Everything a filter or evaluator sees about the current plan.
pub struct PlanContext<'a> {
    pub task: &'a TaskDescription,
    pub robot: &'a RobotModel,
    /// Arm chain ending at the TCP of the task's end effector.
    pub chain: KinematicChain,
    pub seed: u64,
    pub progress: Option<ProgressFn>,
}

impl PlanContext<'_> {
    pub fn report(&self, event: ProgressEvent) {
        if let Some(p) = &self.progress {
            p(event);
        }
    }
}

/// Mixes plan seed, candidate and step into an independent stream seed.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(seed) ^ a) ^ b)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvocationCounts {
    pub generator: usize,
    pub filter: usize,
    pub evaluator: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub generate_ms: f64,
    pub filter_ms: f64,
    pub evaluate_ms: f64,
}

#[derive(Clone, Debug)]
pub struct PlanOutput {
    /// Best first; ties keep generation order.
    pub candidates: Vec<GraspCandidate>,
    pub generated: usize,
    pub cache_hit: bool,
    /// Set when a cache entry from different generator settings was replaced.
    pub cache_overwrite: Option<Provenance>,
    pub cache_warnings: Vec<String>,
    pub timings: StageTimings,
    pub seed: u64,
}

#[derive(Clone)]
pub struct PlanOptions {
    pub seed: u64,
    /// Worker threads for the pipeline stages.
    pub jobs: usize,
    pub progress: Option<ProgressFn>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            seed: 0,
            jobs: 1,
            progress: None,
        }
    }
}

/// Configured pipeline. The cache and invocation counters live as long as
/// the planner.
pub struct Planner {
    generator: Box<dyn GraspGenerator>,
    filter: Box<dyn GraspFilter>,
    evaluator: Box<dyn GraspEvaluator>,
    cache: Arc<GraspCache>,
    generator_calls: AtomicUsize,
    filter_calls: AtomicUsize,
    evaluator_calls: AtomicUsize,
}

impl Planner {
    pub fn new(config: &PlannerConfig, registry: &PluginRegistry) -> Result<Self, PlannerError> {
        let cache = Arc::new(GraspCache::from_mode(&config.cache)?);
        Self::with_cache(config, registry, cache)
    }

    pub fn with_cache(config: &PlannerConfig, registry: &PluginRegistry, cache: Arc<GraspCache>) -> Result<Self, PlannerError> {
        Ok(Planner {
            generator: registry.generator(&config.generator.name, &config.generator.params)?,
            filter: registry.filter(&config.filter.name, &config.filter.params)?,
            evaluator: registry.evaluator(&config.evaluator.name, &config.evaluator.params)?,
            cache,
            generator_calls: AtomicUsize::new(0),
            filter_calls: AtomicUsize::new(0),
            evaluator_calls: AtomicUsize::new(0),
        })
    }

    pub fn cache(&self) -> &Arc<GraspCache> {
        &self.cache
    }

    pub fn invocations(&self) -> InvocationCounts {
        InvocationCounts {
            generator: self.generator_calls.load(Ordering::SeqCst),
            filter: self.filter_calls.load(Ordering::SeqCst),
            evaluator: self.evaluator_calls.load(Ordering::SeqCst),
        }
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            generator: self.generator.name().to_string(),
            params_hash: self.generator.params_hash(),
        }
    }

    /// Runs the pipeline. Output order is independent of `opts.jobs`.
    pub fn plan(&self, task: &TaskDescription, robot: &RobotModel, opts: &PlanOptions) -> Result<PlanOutput, PlannerError> {
        validate_against(task, robot)?;
        let ee = robot.end_effector(&task.ee_group).expect("validated end effector");
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs.max(1))
            .build()
            .map_err(|e| PlannerError::ThreadPool(e.to_string()))?;
        let ctx = PlanContext {
            task,
            robot,
            chain: robot.tcp_chain(ee),
            seed: opts.seed,
            progress: opts.progress.clone(),
        };
        let mut timings = StageTimings::default();

        let t0 = Instant::now();
        let key = CacheKey::new(ee.name.clone(), task.object.digest());
        let provenance = self.provenance();
        let cached = self.cache.get(&key);
        let mut cache_overwrite = None;
        let (grasps, cache_hit) = match cached {
            Some(entry) if entry.provenance == provenance => (entry.grasps, true),
            _ => {
                self.generator_calls.fetch_add(1, Ordering::SeqCst);
                let grasps = pool.install(|| self.generator.generate(task.object.mesh(), ee, opts.seed))?;
                let outcome = self.cache.put(CacheEntry {
                    key,
                    provenance,
                    grasps: grasps.clone(),
                })?;
                if let PutOutcome::Overwrote(old) = outcome {
                    cache_overwrite = Some(old);
                }
                (grasps, false)
            }
        };
        timings.generate_ms = t0.elapsed().as_secs_f64() * 1e3;
        ctx.report(ProgressEvent {
            stage: Stage::Generate,
            fraction: 1.0,
        });

        let t1 = Instant::now();
        self.filter_calls.fetch_add(1, Ordering::SeqCst);
        let mut candidates = pool.install(|| self.filter.filter(&grasps, &ctx))?;
        timings.filter_ms = t1.elapsed().as_secs_f64() * 1e3;
        ctx.report(ProgressEvent {
            stage: Stage::Filter,
            fraction: 1.0,
        });

        let t2 = Instant::now();
        self.evaluator_calls.fetch_add(1, Ordering::SeqCst);
        let scores = pool.install(|| self.evaluator.evaluate(&candidates, &ctx))?;
        if scores.len() != candidates.len() {
            return Err(PlannerError::ScoreCount {
                expected: candidates.len(),
                got: scores.len(),
            });
        }
        for (i, (c, s)) in candidates.iter_mut().zip(scores).enumerate() {
            if !s.is_finite() {
                return Err(PlannerError::NonFiniteScore(i));
            }
            c.score = s;
        }
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.gen_index.cmp(&b.gen_index)));
        timings.evaluate_ms = t2.elapsed().as_secs_f64() * 1e3;
        ctx.report(ProgressEvent {
            stage: Stage::Evaluate,
            fraction: 1.0,
        });

        Ok(PlanOutput {
            candidates,
            generated: grasps.len(),
            cache_hit,
            cache_overwrite,
            cache_warnings: self.cache.take_warnings(),
            timings,
            seed: opts.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn infeasible_task_gives_empty_result() {
        let planner = Planner::new(&PlannerConfig::default(), &PluginRegistry::with_builtins()).unwrap();
        let out = planner.plan(&fixtures::infeasible_task(), &fixtures::reference_robot(), &PlanOptions::default()).unwrap();
        assert!(out.generated > 0);
        assert!(out.candidates.is_empty());
    }

    #[test]
    fn config_defaults_and_unknown_plugins() {
        let c = PlannerConfig::from_json("{}").unwrap();
        assert_eq!(c, PlannerConfig::default());
        let c = PlannerConfig::from_json(r#"{"generator": {"name": "nope"}, "cache": {"mode": "disk", "dir": "/tmp/x"}}"#).unwrap();
        assert!(matches!(c.cache, CacheMode::Disk { .. }));
        let err = Planner::new(&c, &PluginRegistry::with_builtins()).err().unwrap();
        assert!(matches!(err, PlannerError::UnknownPlugin { kind: PluginKind::Generator, .. }));
        assert!(PlannerConfig::from_json(r#"{"generatr": {}}"#).is_err());
    }

    #[test]
    fn seeds_differ_per_candidate_and_step() {
        let a = derive_seed(1, 0, 0);
        assert_ne!(a, derive_seed(1, 0, 1));
        assert_ne!(a, derive_seed(1, 1, 0));
        assert_ne!(a, derive_seed(2, 0, 0));
        assert_eq!(a, derive_seed(1, 0, 0));
    }
}
