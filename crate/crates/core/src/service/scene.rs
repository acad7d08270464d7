// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SessionState;
use crate::geometry::{RoiBox, TriMesh};
use crate::pose::PoseDoc;
use crate::taskmodel::tcp_world_pose;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneObject {
    pub digest: String,
    pub pose: PoseDoc,
    /// Object-frame mesh.
    pub mesh: TriMesh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneStep {
    pub pose: PoseDoc,
    pub tol_pos: [f64; 3],
    pub tol_rot: [f64; 3],
}

/// Arm skeleton at the task's start configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRobot {
    pub name: String,
    /// Base origin followed by each joint frame origin.
    pub joints: Vec<[f64; 3]>,
    pub tcp: PoseDoc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneCandidate {
    pub index: usize,
    pub score: f64,
    /// TCP frame in the world with the object at its first step.
    pub tcp_world: PoseDoc,
    pub selected: bool,
}

/// Everything a viewer needs to draw a session.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SceneBundle {
    pub session: String,
    pub revision: u64,
    pub object: SceneObject,
    pub steps: Vec<SceneStep>,
    pub robot: SceneRobot,
    pub candidates: Vec<SceneCandidate>,
    pub selected: Option<usize>,
    pub roi: Option<RoiBox>,
    /// SHA-256 over the rest of the bundle.
    pub content_hash: String,
}

impl SceneBundle {
    pub fn from_state(state: &SessionState) -> Self {
        let task = &state.task;
        let ee = state.robot.end_effector(&task.ee_group).expect("validated end effector");
        let chain = state.robot.tcp_chain(ee);
        let values = chain.values(&task.start_arm_config).expect("validated start configuration");
        let mut joints = vec![[0.0; 3]];
        joints.extend(chain.link_frames(&values).iter().map(|f| -> [f64; 3] { f.translation.vector.into() }));
        let first_step = task.steps[0].pose;
        let candidates = state
            .result
            .iter()
            .flat_map(|r| r.candidates.iter().enumerate())
            .map(|(index, c)| SceneCandidate {
                index,
                score: c.score,
                tcp_world: PoseDoc::from(&tcp_world_pose(&first_step, &c.grasp)),
                selected: state.selected == Some(index),
            })
            .collect();
        let mut bundle = SceneBundle {
            session: state.id.clone(),
            revision: state.revision,
            object: SceneObject {
                digest: task.object.digest().to_hex(),
                pose: PoseDoc::from(&task.object.pose),
                mesh: (**task.object.mesh()).clone(),
            },
            steps: task
                .steps
                .iter()
                .map(|s| SceneStep {
                    pose: PoseDoc::from(&s.pose),
                    tol_pos: s.tol_pos.into(),
                    tol_rot: s.tol_rot.into(),
                })
                .collect(),
            robot: SceneRobot {
                name: state.robot.name.clone(),
                joints,
                tcp: PoseDoc::from(&chain.fk(&values)),
            },
            candidates,
            selected: state.selected,
            roi: state.roi.clone(),
            content_hash: String::new(),
        };
        bundle.content_hash = bundle.compute_hash();
        bundle
    }

    /// Hash of the bundle with `content_hash` blanked.
    pub fn compute_hash(&self) -> String {
        let mut copy = self.clone();
        copy.content_hash.clear();
        let bytes = serde_json::to_vec(&copy).expect("scene serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
