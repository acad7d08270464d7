// SPDX-License-Identifier: Apache-2.0

//! Session store behind the planning service. Holds the operator's robot,
//! task, last plan result and selection per session, independent of the
//! HTTP transport.
//!
//! Mutations on one session are serialized by a writer lock and publish a
//! new immutable [`SessionState`]; readers load the current snapshot without
//! taking any lock.

mod scene;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use arc_swap::ArcSwap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::{crop_cloud, reconstruct_mesh, PointCloud, RoiBox, TriMesh};
use crate::kinematics::{JointConfig, KinematicsError, ReachStatus, RobotModel};
use crate::planner::{
    GraspCache, GraspCandidate, PlanOptions, Planner, PlannerConfig, PlannerError, PluginRegistry, ProgressEvent,
    StageTimings,
};
use crate::pose::PoseDoc;
use crate::taskmodel::{parse_task, tcp_world_pose, update_object, GeometrySource, ObjectInfo, StepsDoc, TaskDescription, TaskError};

pub use scene::{SceneBundle, SceneCandidate, SceneObject, SceneRobot, SceneStep};

/// Largest point cloud accepted by [`SessionStore::apply_roi`].
pub const MAX_CLOUD_POINTS: usize = 5_000_000;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
    #[error("invalid robot: {0}")]
    Robot(#[from] KinematicsError),
    #[error("invalid task: {0}")]
    Task(#[from] TaskError),
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("stale revision {given}; session is at revision {current}")]
    StaleRevision { given: u64, current: u64 },
    #[error("no plan result; request grasps first")]
    NoResult,
    #[error("candidate index {index} out of range for {len} candidates")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("point cloud has {points} points; at most {limit} are accepted")]
    CloudTooLarge { points: usize, limit: usize },
    #[error("mesh reconstruction from {points} points in the ROI failed: {reason}")]
    Roi { points: usize, reason: String },
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

/// Coarse error classes, mapped onto transport status codes by the server.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    NotFound,
    Invalid,
    Conflict,
    Internal,
}

impl ServiceError {
    pub fn class(&self) -> ErrorClass {
        match self {
            ServiceError::UnknownSession(_) => ErrorClass::NotFound,
            ServiceError::StaleRevision { .. } | ServiceError::NoResult => ErrorClass::Conflict,
            ServiceError::Planner(
                PlannerError::UnknownPlugin { .. } | PlannerError::InvalidParams { .. } | PlannerError::Config(_),
            ) => ErrorClass::Invalid,
            ServiceError::Planner(_) => ErrorClass::Internal,
            _ => ErrorClass::Invalid,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::Robot(_) => "invalid_robot",
            ServiceError::Task(_) => "invalid_task",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::StaleRevision { .. } => "stale_revision",
            ServiceError::NoResult => "no_result",
            ServiceError::IndexOutOfRange { .. } => "index_out_of_range",
            ServiceError::CloudTooLarge { .. } => "cloud_too_large",
            ServiceError::Roi { .. } => "roi_failed",
            ServiceError::Planner(_) => "planner",
        }
    }

    /// Error document returned to clients.
    pub fn body(&self) -> Value {
        let mut body = json!({"error": self.code(), "message": self.to_string()});
        match self {
            ServiceError::Roi { points, .. } | ServiceError::CloudTooLarge { points, .. } => {
                body["points"] = json!(points);
            }
            ServiceError::StaleRevision { current, .. } => body["revision"] = json!(current),
            _ => {}
        }
        body
    }
}

/// Plan result stored in a session.
#[derive(Clone, Debug)]
pub struct PlanResult {
    pub candidates: Vec<GraspCandidate>,
    /// Session revision this result was produced at.
    pub revision: u64,
    pub generated: usize,
    pub cache_hit: bool,
    pub timings: StageTimings,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct SessionState {
    pub id: String,
    pub robot: Arc<RobotModel>,
    pub task: Arc<TaskDescription>,
    pub result: Option<Arc<PlanResult>>,
    /// Always `< result.candidates.len()` when set.
    pub selected: Option<usize>,
    pub roi: Option<RoiBox>,
    pub revision: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub robot: Value,
    pub task: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub revision: u64,
    pub ee_group: String,
    pub steps: usize,
    pub candidates: Option<usize>,
    pub selected: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanRequest {
    /// Pipeline override. Its cache mode is ignored; the store's cache is used.
    pub config: Option<PlannerConfig>,
    pub seed: Option<u64>,
    pub revision: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub index: usize,
    pub score: f64,
    pub per_step: Vec<ReachStatus>,
    pub tcp_in_object: PoseDoc,
    /// Nominal TCP pose in the world at each step.
    pub tcp_world: Vec<PoseDoc>,
    pub finger_config: JointConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub revision: u64,
    pub result_revision: u64,
    pub generated: usize,
    pub cache_hit: bool,
    pub timings: StageTimings,
    pub seed: u64,
    pub candidates: Vec<CandidateSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectRequest {
    pub index: usize,
    #[serde(default)]
    pub revision: Option<u64>,
}

/// End-effector waypoints for the selected candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionState {
    pub revision: u64,
    pub selected: usize,
    /// Nominal world TCP pose at each step.
    pub waypoints: Vec<PoseDoc>,
    /// World TCP pose reached by the stored arm configuration at each step.
    pub achieved: Vec<PoseDoc>,
    pub arm_configs: Vec<JointConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectRequest {
    pub geometry: GeometrySource,
    /// Keeps the current object pose when absent.
    #[serde(default)]
    pub pose: Option<PoseDoc>,
    #[serde(default)]
    pub revision: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoiRequest {
    pub cloud: PointCloud,
    #[serde(rename = "box")]
    pub roi: RoiBox,
    #[serde(default)]
    pub revision: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsRequest {
    pub steps: Vec<PoseDoc>,
    pub tol_pos: Vec<[f64; 3]>,
    pub tol_rot: Vec<[f64; 3]>,
    #[serde(default)]
    pub revision: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObjectState {
    pub revision: u64,
    pub digest: String,
    pub pose: PoseDoc,
    /// Object-frame mesh.
    pub mesh: TriMesh,
}

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub planner: PlannerConfig,
    pub jobs: usize,
    /// Seed used when a plan request carries none.
    pub seed: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            planner: PlannerConfig::default(),
            jobs: 1,
            seed: 0,
        }
    }
}

struct Slot {
    writer: Mutex<()>,
    state: ArcSwap<SessionState>,
    progress: Mutex<Option<ProgressEvent>>,
}

pub struct SessionStore {
    config: ServiceConfig,
    registry: PluginRegistry,
    cache: Arc<GraspCache>,
    planner: Planner,
    generator_runs: AtomicUsize,
    next_id: AtomicU64,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

impl SessionStore {
    pub fn new(config: ServiceConfig, registry: PluginRegistry) -> Result<Self, ServiceError> {
        let cache = Arc::new(GraspCache::from_mode(&config.planner.cache)?);
        let planner = Planner::with_cache(&config.planner, &registry, cache.clone())?;
        Ok(SessionStore {
            config,
            registry,
            cache,
            planner,
            generator_runs: AtomicUsize::new(0),
            next_id: AtomicU64::new(1),
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn cache(&self) -> &Arc<GraspCache> {
        &self.cache
    }

    /// Plans across all sessions that had to run the generator.
    pub fn generator_runs(&self) -> usize {
        self.generator_runs.load(Ordering::SeqCst)
    }

    pub fn create_session(&self, req: &CreateSessionRequest) -> Result<SessionInfo, ServiceError> {
        let robot = RobotModel::from_json(&req.robot.to_string())?;
        let task = parse_task(&req.task.to_string(), None, &robot)?;
        let id = self.next_id.fetch_add(1, Ordering::SeqCst).to_string();
        let state = SessionState {
            id: id.clone(),
            robot: Arc::new(robot),
            task: Arc::new(task),
            result: None,
            selected: None,
            roi: None,
            revision: 0,
        };
        let info = session_info(&state);
        let slot = Arc::new(Slot {
            writer: Mutex::new(()),
            state: ArcSwap::from_pointee(state),
            progress: Mutex::new(None),
        });
        self.sessions.write().unwrap_or_else(|e| e.into_inner()).insert(id, slot);
        Ok(info)
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ServiceError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    /// Current snapshot of a session.
    pub fn snapshot(&self, id: &str) -> Result<Arc<SessionState>, ServiceError> {
        Ok(self.slot(id)?.state.load_full())
    }

    pub fn session_info(&self, id: &str) -> Result<SessionInfo, ServiceError> {
        let state = self.snapshot(id)?;
        Ok(session_info(&state))
    }

    /// Latest progress event of the running or last plan.
    pub fn progress(&self, id: &str) -> Result<Option<ProgressEvent>, ServiceError> {
        Ok(*self.slot(id)?.progress.lock().unwrap_or_else(|e| e.into_inner()))
    }

    /// Applies `f` under the session's writer lock and publishes its result
    /// with the revision bumped by one. Nothing changes when `f` fails.
    fn mutate(
        &self,
        slot: &Slot,
        revision: Option<u64>,
        f: impl FnOnce(&SessionState) -> Result<SessionState, ServiceError>,
    ) -> Result<Arc<SessionState>, ServiceError> {
        let _writer = slot.writer.lock().unwrap_or_else(|e| e.into_inner());
        let current = slot.state.load_full();
        if let Some(given) = revision {
            if given != current.revision {
                return Err(ServiceError::StaleRevision {
                    given,
                    current: current.revision,
                });
            }
        }
        let mut next = f(&current)?;
        next.revision = current.revision + 1;
        let next = Arc::new(next);
        slot.state.store(next.clone());
        Ok(next)
    }

    pub fn get_grasps(&self, id: &str, req: &PlanRequest) -> Result<PlanSummary, ServiceError> {
        let slot = self.slot(id)?;
        let custom = match &req.config {
            Some(config) => Some(Planner::with_cache(config, &self.registry, self.cache.clone())?),
            None => None,
        };
        let planner = custom.as_ref().unwrap_or(&self.planner);
        let seed = req.seed.unwrap_or(self.config.seed);
        let progress_slot = slot.clone();
        let opts = PlanOptions {
            seed,
            jobs: self.config.jobs,
            progress: Some(Arc::new(move |event: ProgressEvent| {
                *progress_slot.progress.lock().unwrap_or_else(|e| e.into_inner()) = Some(event);
            })),
        };
        let state = self.mutate(&slot, req.revision, |current| {
            *slot.progress.lock().unwrap_or_else(|e| e.into_inner()) = None;
            let out = planner.plan(&current.task, &current.robot, &opts)?;
            if !out.cache_hit {
                self.generator_runs.fetch_add(1, Ordering::SeqCst);
            }
            Ok(SessionState {
                result: Some(Arc::new(PlanResult {
                    candidates: out.candidates,
                    revision: current.revision + 1,
                    generated: out.generated,
                    cache_hit: out.cache_hit,
                    timings: out.timings,
                    seed: out.seed,
                })),
                selected: None,
                ..current.clone()
            })
        })?;
        Ok(plan_summary(&state).expect("result just stored"))
    }

    /// Stored plan result without re-planning.
    pub fn grasps(&self, id: &str) -> Result<PlanSummary, ServiceError> {
        let state = self.snapshot(id)?;
        plan_summary(&state).ok_or(ServiceError::NoResult)
    }

    pub fn select_grasp(&self, id: &str, req: &SelectRequest) -> Result<SelectionState, ServiceError> {
        let slot = self.slot(id)?;
        let state = self.mutate(&slot, req.revision, |current| {
            let result = current.result.as_ref().ok_or(ServiceError::NoResult)?;
            if req.index >= result.candidates.len() {
                return Err(ServiceError::IndexOutOfRange {
                    index: req.index,
                    len: result.candidates.len(),
                });
            }
            Ok(SessionState {
                selected: Some(req.index),
                ..current.clone()
            })
        })?;
        Ok(selection_state(&state))
    }

    pub fn update_object(&self, id: &str, req: &ObjectRequest) -> Result<ObjectState, ServiceError> {
        let slot = self.slot(id)?;
        let state = self.mutate(&slot, req.revision, |current| {
            let pose = match &req.pose {
                Some(doc) => doc.to_pose().map_err(|m| ServiceError::BadRequest(format!("pose: {m}")))?,
                None => current.task.object.pose,
            };
            let object = ObjectInfo::new(req.geometry.clone(), pose, None)?;
            Ok(with_task(current, update_object(&current.task, object)?))
        })?;
        Ok(object_state(&state))
    }

    /// Crops `cloud` to the box, rebuilds the object from the kept points
    /// and swaps it into the task. The new mesh keeps the current object
    /// frame so step poses stay meaningful.
    pub fn apply_roi(&self, id: &str, req: &RoiRequest) -> Result<ObjectState, ServiceError> {
        let slot = self.slot(id)?;
        if req.cloud.len() > MAX_CLOUD_POINTS {
            return Err(ServiceError::CloudTooLarge {
                points: req.cloud.len(),
                limit: MAX_CLOUD_POINTS,
            });
        }
        if req.cloud.frame() != "world" {
            return Err(ServiceError::BadRequest(format!(
                "cloud frame {:?} is not supported; send points in the world frame",
                req.cloud.frame()
            )));
        }
        let state = self.mutate(&slot, req.revision, |current| {
            let cropped = crop_cloud(&req.cloud, &req.roi);
            let mesh = reconstruct_mesh(&cropped).map_err(|e| ServiceError::Roi {
                points: cropped.len(),
                reason: e.to_string(),
            })?;
            let pose = current.task.object.pose;
            let object = ObjectInfo::from_mesh(mesh.transformed(&pose.inverse()), pose)?;
            let mut next = with_task(current, update_object(&current.task, object)?);
            next.roi = Some(req.roi.clone());
            Ok(next)
        })?;
        Ok(object_state(&state))
    }

    /// Replaces the task steps. Plan result and selection are dropped since
    /// their per-step statuses no longer apply.
    pub fn update_steps(&self, id: &str, req: &StepsRequest) -> Result<SessionInfo, ServiceError> {
        let slot = self.slot(id)?;
        let doc = StepsDoc {
            steps: req.steps.clone(),
            tol_pos: req.tol_pos.clone(),
            tol_rot: req.tol_rot.clone(),
        };
        let state = self.mutate(&slot, req.revision, |current| {
            let steps = doc.to_steps()?;
            let task = TaskDescription {
                steps,
                ..(*current.task).clone()
            };
            Ok(with_task(current, task))
        })?;
        Ok(session_info(&state))
    }

    pub fn get_scene(&self, id: &str) -> Result<SceneBundle, ServiceError> {
        let state = self.snapshot(id)?;
        Ok(SceneBundle::from_state(&state))
    }
}

/// `current` with a new task and no result or selection.
fn with_task(current: &SessionState, task: TaskDescription) -> SessionState {
    SessionState {
        task: Arc::new(task),
        result: None,
        selected: None,
        ..current.clone()
    }
}

fn session_info(state: &SessionState) -> SessionInfo {
    SessionInfo {
        id: state.id.clone(),
        revision: state.revision,
        ee_group: state.task.ee_group.clone(),
        steps: state.task.steps.len(),
        candidates: state.result.as_ref().map(|r| r.candidates.len()),
        selected: state.selected,
    }
}

fn plan_summary(state: &SessionState) -> Option<PlanSummary> {
    let result = state.result.as_ref()?;
    let candidates = result
        .candidates
        .iter()
        .enumerate()
        .map(|(index, c)| CandidateSummary {
            index,
            score: c.score,
            per_step: c.per_step_status.clone(),
            tcp_in_object: PoseDoc::from(&c.grasp.tcp_in_object),
            tcp_world: state
                .task
                .steps
                .iter()
                .map(|s| PoseDoc::from(&tcp_world_pose(&s.pose, &c.grasp)))
                .collect(),
            finger_config: c.grasp.finger_config.clone(),
        })
        .collect();
    Some(PlanSummary {
        revision: state.revision,
        result_revision: result.revision,
        generated: result.generated,
        cache_hit: result.cache_hit,
        timings: result.timings,
        seed: result.seed,
        candidates,
    })
}

fn selection_state(state: &SessionState) -> SelectionState {
    let index = state.selected.expect("selection just stored");
    let candidate = &state.result.as_ref().expect("selection implies a result").candidates[index];
    let ee = state.robot.end_effector(&state.task.ee_group).expect("validated end effector");
    let chain = state.robot.tcp_chain(ee);
    SelectionState {
        revision: state.revision,
        selected: index,
        waypoints: state
            .task
            .steps
            .iter()
            .map(|s| PoseDoc::from(&tcp_world_pose(&s.pose, &candidate.grasp)))
            .collect(),
        achieved: candidate
            .per_step_config
            .iter()
            .map(|q| PoseDoc::from(&chain.forward_kinematics(q).expect("planner configs cover the arm")))
            .collect(),
        arm_configs: candidate.per_step_config.clone(),
    }
}

fn object_state(state: &SessionState) -> ObjectState {
    let object = &state.task.object;
    ObjectState {
        revision: state.revision,
        digest: object.digest().to_hex(),
        pose: PoseDoc::from(&object.pose),
        mesh: (**object.mesh()).clone(),
    }
}
