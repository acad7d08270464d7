// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::kinematics::{Contact, JointConfig, ReachStatus};
use crate::pose::{serde_pose, Pose, PoseDoc};

/// Hand TCP pose in the object frame plus the finger joint configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    #[serde(with = "serde_pose")]
    pub tcp_in_object: Pose,
    pub finger_config: JointConfig,
    pub ee_name: String,
    /// Contacts found while closing the fingers, in the object frame.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contacts: Vec<Contact>,
}

impl Grasp {
    pub fn new(tcp_in_object: Pose, finger_config: JointConfig, ee_name: impl Into<String>) -> Self {
        Grasp {
            tcp_in_object,
            finger_config,
            ee_name: ee_name.into(),
            contacts: Vec::new(),
        }
    }
}

/// World TCP pose when the object sits at `step_pose`.
pub fn tcp_world_pose(step_pose: &Pose, grasp: &Grasp) -> Pose {
    step_pose * grasp.tcp_in_object
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepStatusRecord {
    pub status: ReachStatus,
}

/// One entry of the grasp output document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspRecord {
    pub tcp_in_object: PoseDoc,
    pub finger_config: JointConfig,
    pub ee_name: String,
    pub score: f64,
    pub per_step: Vec<StepStatusRecord>,
}

/// Grasp output document, best first.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GraspList {
    pub grasps: Vec<GraspRecord>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Translation3;

    #[test]
    fn composition_cases() {
        let g = Grasp::new(Pose::translation(0.0, 1.0, 0.0), JointConfig::new(), "ee");
        assert_eq!(tcp_world_pose(&Pose::identity(), &g), g.tcp_in_object);
        let step = Pose::from_parts(Translation3::new(1.0, 0.0, 0.0), Default::default());
        let id = Grasp::new(Pose::identity(), JointConfig::new(), "ee");
        assert_eq!(tcp_world_pose(&step, &id), step);
        let p = tcp_world_pose(&step, &g).translation.vector;
        assert!((p - nalgebra::Vector3::new(1.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn output_document_shape() {
        let rec = GraspRecord {
            tcp_in_object: PoseDoc::from(&Pose::identity()),
            finger_config: JointConfig::from_pairs([("f", 0.01)]),
            ee_name: "ee".into(),
            score: 0.5,
            per_step: vec![StepStatusRecord { status: ReachStatus::ToleranceOnly }],
        };
        let v = serde_json::to_value(GraspList { grasps: vec![rec] }).unwrap();
        assert_eq!(v["grasps"][0]["per_step"][0]["status"], "tolerance_only");
        assert_eq!(v["grasps"][0]["tcp_in_object"]["quat"][3], 1.0);
    }
}
