// SPDX-License-Identifier: Apache-2.0

//! Object-centric task descriptions and grasps.

mod grasp;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{box_mesh, cylinder_mesh, icosphere, load_mesh, mesh_digest, MeshDigest, TriMesh};
use crate::kinematics::{JointConfig, RobotModel};
use crate::pose::{Pose, PoseDoc};

pub use grasp::{tcp_world_pose, Grasp, GraspList, GraspRecord, StepStatusRecord};

/// Facets used when a cylinder primitive is meshed.
pub const CYLINDER_SEGMENTS: usize = 48;
/// Icosphere subdivision level used when a sphere primitive is meshed.
pub const SPHERE_SUBDIVISIONS: u32 = 3;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("task document does not match the schema: {0}")]
    Schema(String),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("object mesh {path:?} could not be loaded: {message}")]
    MissingMesh { path: PathBuf, message: String },
    #[error("unknown ee_group {name:?}; robot has {available:?}")]
    UnknownEeGroup { name: String, available: Vec<String> },
    #[error("{field}[{index}] has a negative or non-finite component")]
    NegativeTolerance { field: &'static str, index: usize },
    #[error("{field} has {got} entries but there are {expected} steps")]
    LengthMismatch { field: &'static str, expected: usize, got: usize },
    #[error("invalid object geometry: {0}")]
    InvalidGeometry(String),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> TaskError {
    TaskError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// Where the object geometry comes from; kept so a task serializes back to
/// the document it was read from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometrySource {
    /// Full extents (m), centered at the object origin.
    Box { size: [f64; 3] },
    /// Axis along the object z-axis, centered at the origin.
    Cylinder { radius: f64, height: f64 },
    Sphere { radius: f64 },
    /// OBJ or binary STL file; relative paths resolve against the task file.
    Mesh { path: String },
    Inline { mesh: TriMesh },
}

impl GeometrySource {
    pub fn build(&self, base_dir: Option<&Path>) -> Result<TriMesh, TaskError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(invalid(format!("object.geometry.{name}"), "must be positive"))
            }
        };
        let mesh = match self {
            GeometrySource::Box { size } => {
                for (i, v) in size.iter().enumerate() {
                    positive(&format!("size[{i}]"), *v)?;
                }
                box_mesh(Vector3::from(*size))
            }
            GeometrySource::Cylinder { radius, height } => {
                cylinder_mesh(positive("radius", *radius)?, positive("height", *height)?, CYLINDER_SEGMENTS)
            }
            GeometrySource::Sphere { radius } => icosphere(positive("radius", *radius)?, SPHERE_SUBDIVISIONS),
            GeometrySource::Mesh { path } => {
                let p = Path::new(path);
                let full = match base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.to_path_buf(),
                };
                load_mesh(&full).map_err(|e| TaskError::MissingMesh {
                    path: full.clone(),
                    message: e.to_string(),
                })?
            }
            GeometrySource::Inline { mesh } => mesh.clone(),
        };
        if mesh.is_empty() {
            return Err(TaskError::InvalidGeometry("mesh has no faces".into()));
        }
        Ok(mesh)
    }
}

/// The manipulated object: geometry in its own frame plus its initial world pose.
#[derive(Clone, Debug)]
pub struct ObjectInfo {
    pub source: GeometrySource,
    pub pose: Pose,
    mesh: Arc<TriMesh>,
    digest: MeshDigest,
}

impl PartialEq for ObjectInfo {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.pose == other.pose && self.digest == other.digest
    }
}

impl ObjectInfo {
    pub fn new(source: GeometrySource, pose: Pose, base_dir: Option<&Path>) -> Result<Self, TaskError> {
        let mesh = source.build(base_dir)?;
        let digest = mesh_digest(&mesh);
        Ok(ObjectInfo {
            source,
            pose,
            mesh: Arc::new(mesh),
            digest,
        })
    }

    pub fn from_mesh(mesh: TriMesh, pose: Pose) -> Result<Self, TaskError> {
        Self::new(GeometrySource::Inline { mesh }, pose, None)
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn digest(&self) -> MeshDigest {
        self.digest
    }
}

/// Object pose at one task step, with tolerances about the object's axes.
#[derive(Clone, Debug, PartialEq)]
pub struct ToleranceStep {
    pub pose: Pose,
    /// Half-widths of the position box (m).
    pub tol_pos: Vector3<f64>,
    /// Half-ranges of intrinsic X-Y-Z rotation offsets (rad).
    pub tol_rot: Vector3<f64>,
}

impl ToleranceStep {
    pub fn exact(pose: Pose) -> Self {
        ToleranceStep {
            pose,
            tol_pos: Vector3::zeros(),
            tol_rot: Vector3::zeros(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TaskDescription {
    pub ee_group: String,
    pub object: ObjectInfo,
    pub steps: Vec<ToleranceStep>,
    pub start_arm_config: JointConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointStateDoc {
    name: Vec<String>,
    position: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectDoc {
    geometry: GeometrySource,
    pose: PoseDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    ee_group: String,
    object: ObjectDoc,
    steps: Vec<PoseDoc>,
    tol_pos: Vec<[f64; 3]>,
    tol_rot: Vec<[f64; 3]>,
    start_arm_config: JointStateDoc,
}

fn check_tolerances(field: &'static str, tols: &[[f64; 3]], steps: usize) -> Result<Vec<Vector3<f64>>, TaskError> {
    if tols.len() != steps {
        return Err(TaskError::LengthMismatch {
            field,
            expected: steps,
            got: tols.len(),
        });
    }
    tols.iter()
        .enumerate()
        .map(|(index, t)| {
            if t.iter().all(|v| v.is_finite() && *v >= 0.0) {
                Ok(Vector3::from(*t))
            } else {
                Err(TaskError::NegativeTolerance { field, index })
            }
        })
        .collect()
}

/// Parses and validates a task document against `robot`. Relative mesh paths
/// resolve against `base_dir`.
pub fn parse_task(text: &str, base_dir: Option<&Path>, robot: &RobotModel) -> Result<TaskDescription, TaskError> {
    let doc: TaskDoc = crate::from_json(text).map_err(TaskError::Schema)?;
    let steps = StepsDoc {
        steps: doc.steps,
        tol_pos: doc.tol_pos,
        tol_rot: doc.tol_rot,
    }
    .to_steps()?;
    let pose = doc.object.pose.to_pose().map_err(|m| invalid("object.pose", m))?;
    let object = ObjectInfo::new(doc.object.geometry, pose, base_dir)?;

    let js = doc.start_arm_config;
    if js.name.len() != js.position.len() {
        return Err(invalid("start_arm_config", "name and position differ in length"));
    }
    let start_arm_config = JointConfig::from_pairs(js.name.into_iter().zip(js.position));
    let task = TaskDescription {
        ee_group: doc.ee_group,
        object,
        steps,
        start_arm_config,
    };
    validate_against(&task, robot)?;
    Ok(task)
}

/// Cross-checks the end effector and start configuration against `robot`.
pub fn validate_against(task: &TaskDescription, robot: &RobotModel) -> Result<(), TaskError> {
    let Some(ee) = robot.end_effector(&task.ee_group) else {
        return Err(TaskError::UnknownEeGroup {
            name: task.ee_group.clone(),
            available: robot.end_effectors.iter().map(|e| e.name.clone()).collect(),
        });
    };
    for j in robot.arm.joints() {
        match task.start_arm_config.get(&j.name) {
            None => return Err(invalid("start_arm_config", format!("missing arm joint {:?}", j.name))),
            Some(v) if !j.within_limits(v) => {
                return Err(invalid("start_arm_config", format!("{:?} = {v} is outside its limits", j.name)))
            }
            _ => {}
        }
    }
    for (name, _) in task.start_arm_config.iter() {
        let known = robot.arm.joints().iter().any(|j| j.name == name) || ee.finger_joint_names().any(|f| f == name);
        if !known {
            return Err(invalid("start_arm_config", format!("unknown joint {name:?}")));
        }
    }
    Ok(())
}

impl TaskDescription {
    pub fn to_json(&self) -> String {
        let doc = TaskDoc {
            ee_group: self.ee_group.clone(),
            object: ObjectDoc {
                geometry: self.object.source.clone(),
                pose: PoseDoc::from(&self.object.pose),
            },
            steps: self.steps.iter().map(|s| PoseDoc::from(&s.pose)).collect(),
            tol_pos: self.steps.iter().map(|s| s.tol_pos.into()).collect(),
            tol_rot: self.steps.iter().map(|s| s.tol_rot.into()).collect(),
            start_arm_config: JointStateDoc {
                name: self.start_arm_config.iter().map(|(k, _)| k.to_string()).collect(),
                position: self.start_arm_config.iter().map(|(_, v)| v).collect(),
            },
        };
        serde_json::to_string_pretty(&doc).expect("task document serializes")
    }

    /// Step poses as they serialize, for comparisons that must be exact.
    pub fn steps_json(&self) -> String {
        let steps: Vec<(PoseDoc, [f64; 3], [f64; 3])> = self
            .steps
            .iter()
            .map(|s| (PoseDoc::from(&s.pose), s.tol_pos.into(), s.tol_rot.into()))
            .collect();
        serde_json::to_string(&steps).expect("steps serialize")
    }
}

/// Step list with its tolerances, as it appears inside a task document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsDoc {
    pub steps: Vec<PoseDoc>,
    pub tol_pos: Vec<[f64; 3]>,
    pub tol_rot: Vec<[f64; 3]>,
}

impl StepsDoc {
    pub fn from_task(task: &TaskDescription) -> Self {
        StepsDoc {
            steps: task.steps.iter().map(|s| PoseDoc::from(&s.pose)).collect(),
            tol_pos: task.steps.iter().map(|s| s.tol_pos.into()).collect(),
            tol_rot: task.steps.iter().map(|s| s.tol_rot.into()).collect(),
        }
    }

    pub fn to_steps(&self) -> Result<Vec<ToleranceStep>, TaskError> {
        let n = self.steps.len();
        if n == 0 {
            return Err(invalid("steps", "at least one step is required"));
        }
        let tol_pos = check_tolerances("tol_pos", &self.tol_pos, n)?;
        let tol_rot = check_tolerances("tol_rot", &self.tol_rot, n)?;
        self.steps
            .iter()
            .zip(tol_pos.into_iter().zip(tol_rot))
            .enumerate()
            .map(|(i, (p, (tol_pos, tol_rot)))| {
                let pose = p.to_pose().map_err(|m| invalid(format!("steps[{i}]"), m))?;
                Ok(ToleranceStep { pose, tol_pos, tol_rot })
            })
            .collect()
    }
}

/// Same task with different object geometry. Steps, tolerances and the start
/// configuration are carried over untouched.
pub fn update_object(task: &TaskDescription, object: ObjectInfo) -> Result<TaskDescription, TaskError> {
    if object.mesh().is_empty() {
        return Err(TaskError::InvalidGeometry("mesh has no faces".into()));
    }
    Ok(TaskDescription {
        object,
        ..task.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{write_stl_binary, Point3};
    use crate::pose::rotation_distance;

    fn minimal() -> String {
        r#"{
            "ee_group": "parallel_gripper",
            "object": {"geometry": {"type": "box", "size": [0.04, 0.04, 0.04]}, "pose": {"xyz": [0.5, 0, 0.2]}},
            "steps": [{"xyz": [0.5, 0, 0.2], "rpy": [0, 0, 0]}],
            "tol_pos": [[0, 0, 0]],
            "tol_rot": [[0, 0, 0]],
            "start_arm_config": {"name": ["base_yaw", "shoulder_pitch", "elbow_pitch", "wrist_roll", "wrist_pitch", "flange_roll"],
                                 "position": [0, 0.5, 1.6, 0, 1.04, 0]}
        }"#
        .into()
    }

    #[test]
    fn minimal_task_parses() {
        let t = parse_task(&minimal(), None, &fixtures::reference_robot()).unwrap();
        assert_eq!(t.steps.len(), 1);
        assert_eq!(t.object.mesh().faces().len(), 12);
    }

    #[test]
    fn distinct_validation_errors() {
        let robot = fixtures::reference_robot();
        let cases = [
            (minimal().replace("\"steps\"", "\"stepz\""), "steps"),
            (minimal().replace("parallel_gripper", "suction"), "suction"),
            (minimal().replace("\"tol_pos\": [[0, 0, 0]]", "\"tol_pos\": [[0, -1, 0]]"), "tol_pos[0]"),
            (minimal().replace("\"tol_rot\": [[0, 0, 0]]", "\"tol_rot\": []"), "tol_rot has 0 entries"),
            (
                minimal().replace(r#"{"type": "box", "size": [0.04, 0.04, 0.04]}"#, r#"{"type": "mesh", "path": "nope.stl"}"#),
                "nope.stl",
            ),
        ];
        for (doc, needle) in cases {
            let err = parse_task(&doc, None, &robot).unwrap_err().to_string();
            assert!(err.contains(needle), "{err} lacks {needle}");
        }
        let err = parse_task(&minimal().replace("0.5, 1.6", "0.5, 9.0"), None, &robot).unwrap_err();
        assert!(err.to_string().contains("elbow_pitch"));
    }

    #[test]
    fn round_trips_through_json() {
        let robot = fixtures::reference_robot();
        for task in [fixtures::painting_task(), fixtures::pour_task(), fixtures::handover_task()] {
            let back = parse_task(&task.to_json(), None, &robot).unwrap();
            assert_eq!(back.ee_group, task.ee_group);
            assert_eq!(back.start_arm_config, task.start_arm_config);
            assert_eq!(back.object.digest(), task.object.digest());
            assert_eq!(back.steps.len(), task.steps.len());
            for (a, b) in back.steps.iter().zip(&task.steps) {
                let (p, r) = crate::pose::pose_error(&a.pose, &b.pose);
                assert!(p < 1e-12 && r < 1e-12);
                assert_eq!(a.tol_pos, b.tol_pos);
                assert_eq!(a.tol_rot, b.tol_rot);
            }
        }
    }

    #[test]
    fn mesh_paths_resolve_against_base_dir() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("cube.stl"), write_stl_binary(&box_mesh(Vector3::new(0.04, 0.04, 0.04)))).unwrap();
        let doc = minimal().replace(r#"{"type": "box", "size": [0.04, 0.04, 0.04]}"#, r#"{"type": "mesh", "path": "cube.stl"}"#);
        let robot = fixtures::reference_robot();
        let t = parse_task(&doc, Some(dir.path()), &robot).unwrap();
        assert_eq!(t.object.digest(), mesh_digest(&box_mesh(Vector3::new(0.04, 0.04, 0.04))));
        assert!(t.to_json().contains("cube.stl"));
    }

    #[test]
    fn pour_last_step_is_quarter_turn_of_second() {
        let t = fixtures::pour_task();
        let (a, b) = (&t.steps[1].pose, &t.steps[2].pose);
        let angle = rotation_distance(&a.rotation, &b.rotation);
        assert!((angle - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        let rel = a.inverse() * b;
        let axis = rel.rotation.axis().unwrap();
        assert!((axis.into_inner() - Vector3::x()).norm() < 1e-9);
        assert!(rel.translation.vector.norm() < 1e-12);
    }

    #[test]
    fn painting_has_five_corners_with_millimetre_tolerances() {
        let t = fixtures::painting_task();
        assert_eq!(t.steps.len(), 5);
        for s in &t.steps {
            assert_eq!(s.tol_pos, Vector3::new(0.001, 0.001, 0.0));
        }
    }

    #[test]
    fn update_object_keeps_steps() {
        let task = fixtures::painting_task();
        let goblet = ObjectInfo::from_mesh(fixtures::goblet_mesh(), task.object.pose).unwrap();
        let updated = update_object(&task, goblet).unwrap();
        assert_eq!(updated.steps_json(), task.steps_json());
        assert_ne!(updated.object.digest(), task.object.digest());
        let same = ObjectInfo::new(task.object.source.clone(), task.object.pose, None).unwrap();
        assert_eq!(update_object(&task, same).unwrap(), task);
        let empty = TriMesh::new(vec![Point3::origin()], vec![]).unwrap();
        assert!(ObjectInfo::from_mesh(empty, Pose::identity()).is_err());
    }

    proptest::proptest! {
        #[test]
        fn tcp_world_pose_is_associative(a in proptest::array::uniform6(-1.0f64..1.0), b in proptest::array::uniform6(-1.0f64..1.0), g in proptest::array::uniform6(-1.0f64..1.0)) {
            let p = |v: [f64; 6]| crate::pose::pose_xyz_rpy([v[0], v[1], v[2]], [v[3], v[4], v[5]]);
            let grasp = Grasp::new(p(g), JointConfig::new(), "ee");
            let lhs = tcp_world_pose(&(p(a) * p(b)), &grasp);
            let rhs = p(a) * tcp_world_pose(&p(b), &grasp);
            let (dp, dr) = crate::pose::pose_error(&lhs, &rhs);
            proptest::prop_assert!(dp < 1e-12 && dr < 1e-9);
        }
    }
}
