// SPDX-License-Identifier: Apache-2.0

//! Robot description documents: one serial arm plus its end effectors.

use nalgebra::{Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::{Capsule, EndEffectorModel, Finger, Joint, JointType, KinematicChain, KinematicsError};
use crate::geometry::Point3;
use crate::pose::{Pose, PoseDoc};

pub const ROBOT_SCHEMA_HINT: &str = "{name, base_frame, joints:[{name, type, origin:{xyz, rpy}, axis, limits:[lo,hi]}], \
end_effectors:[{name, palm_frame, tcp_offset:{xyz, rpy}, palm?:[capsule], fingers:[{joints:[...], open:[...], closed:[...], \
links:[{segment:[p0,p1], radius}]}]}]}";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    name: String,
    #[serde(rename = "type")]
    kind: JointType,
    #[serde(default = "identity_doc")]
    origin: PoseDoc,
    axis: [f64; 3],
    limits: [f64; 2],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FingerDoc {
    joints: Vec<JointDoc>,
    open: Vec<f64>,
    closed: Vec<f64>,
    links: Vec<Capsule>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EndEffectorDoc {
    name: String,
    palm_frame: String,
    #[serde(default = "identity_doc")]
    tcp_offset: PoseDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    palm: Vec<Capsule>,
    fingers: Vec<FingerDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotDoc {
    name: String,
    base_frame: String,
    joints: Vec<JointDoc>,
    end_effectors: Vec<EndEffectorDoc>,
}

fn identity_doc() -> PoseDoc {
    PoseDoc::from(&Pose::identity())
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> KinematicsError {
    KinematicsError::InvalidModel(format!("{path}: {msg}"))
}

impl JointDoc {
    fn build(&self, path: &str) -> Result<Joint, KinematicsError> {
        let origin = self.origin.to_pose().map_err(|m| invalid(&format!("{path}.origin"), m))?;
        let axis = Vector3::from(self.axis);
        let n = axis.norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
            return Err(invalid(&format!("{path}.axis"), format!("norm {n} is not 1")));
        }
        let [lo, hi] = self.limits;
        if !(lo <= hi) {
            return Err(invalid(&format!("{path}.limits"), "lower limit above upper limit"));
        }
        Ok(Joint {
            name: self.name.clone(),
            kind: self.kind,
            origin,
            axis: Unit::new_normalize(axis),
            limits: (lo, hi),
        })
    }

    fn from_joint(j: &Joint) -> Self {
        JointDoc {
            name: j.name.clone(),
            kind: j.kind,
            origin: PoseDoc::from(&j.origin),
            axis: j.axis.into_inner().into(),
            limits: [j.limits.0, j.limits.1],
        }
    }
}

/// A serial arm and the end effectors that can be mounted at its tip.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub arm: KinematicChain,
    pub end_effectors: Vec<EndEffectorModel>,
}

impl RobotModel {
    pub fn new(name: impl Into<String>, arm: KinematicChain, end_effectors: Vec<EndEffectorModel>) -> Result<Self, KinematicsError> {
        let model = RobotModel {
            name: name.into(),
            arm,
            end_effectors,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), KinematicsError> {
        if self.arm.dof() == 0 {
            return Err(invalid("joints", "arm has no joints"));
        }
        let arm_names: std::collections::HashSet<&str> = self.arm.joints().iter().map(|j| j.name.as_str()).collect();
        for (i, ee) in self.end_effectors.iter().enumerate() {
            ee.validate()?;
            if self.end_effectors[..i].iter().any(|e| e.name == ee.name) {
                return Err(invalid(&format!("end_effectors[{i}].name"), format!("duplicate end effector {:?}", ee.name)));
            }
            let mut names = arm_names.clone();
            for name in ee.finger_joint_names() {
                if !names.insert(name) {
                    return Err(invalid(&format!("end_effectors[{i}]"), format!("joint name {name:?} reused")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, KinematicsError> {
        let doc: RobotDoc = serde_json::from_str(text)
            .map_err(|e| KinematicsError::InvalidModel(format!("{e}; expected {ROBOT_SCHEMA_HINT}")))?;
        let joints = doc
            .joints
            .iter()
            .enumerate()
            .map(|(i, j)| j.build(&format!("joints[{i}]")))
            .collect::<Result<Vec<_>, _>>()?;
        let arm = KinematicChain::new(doc.base_frame.clone(), "flange", joints)?;
        let mut end_effectors = Vec::with_capacity(doc.end_effectors.len());
        for (i, e) in doc.end_effectors.iter().enumerate() {
            let path = format!("end_effectors[{i}]");
            let tcp_offset = e.tcp_offset.to_pose().map_err(|m| invalid(&format!("{path}.tcp_offset"), m))?;
            let mut fingers = Vec::with_capacity(e.fingers.len());
            for (k, f) in e.fingers.iter().enumerate() {
                let fpath = format!("{path}.fingers[{k}]");
                let joints = f
                    .joints
                    .iter()
                    .enumerate()
                    .map(|(m, j)| j.build(&format!("{fpath}.joints[{m}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                fingers.push(Finger {
                    joints,
                    open: f.open.clone(),
                    closed: f.closed.clone(),
                    links: f.links.clone(),
                });
            }
            end_effectors.push(EndEffectorModel {
                name: e.name.clone(),
                palm_frame: e.palm_frame.clone(),
                tcp_offset,
                palm: e.palm.clone(),
                fingers,
            });
        }
        RobotModel::new(doc.name, arm, end_effectors)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, KinematicsError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| KinematicsError::InvalidModel(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let doc = RobotDoc {
            name: self.name.clone(),
            base_frame: self.arm.base_frame.clone(),
            joints: self.arm.joints().iter().map(JointDoc::from_joint).collect(),
            end_effectors: self
                .end_effectors
                .iter()
                .map(|e| EndEffectorDoc {
                    name: e.name.clone(),
                    palm_frame: e.palm_frame.clone(),
                    tcp_offset: PoseDoc::from(&e.tcp_offset),
                    palm: e.palm.clone(),
                    fingers: e
                        .fingers
                        .iter()
                        .map(|f| FingerDoc {
                            joints: f.joints.iter().map(JointDoc::from_joint).collect(),
                            open: f.open.clone(),
                            closed: f.closed.clone(),
                            links: f.links.clone(),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("robot document serializes")
    }

    pub fn end_effector(&self, name: &str) -> Option<&EndEffectorModel> {
        self.end_effectors.iter().find(|e| e.name == name)
    }

    /// Arm chain whose tip is the TCP of `ee`.
    pub fn tcp_chain(&self, ee: &EndEffectorModel) -> KinematicChain {
        self.arm.with_tool(ee.tcp_offset)
    }
}

impl Capsule {
    pub fn new(p0: [f64; 3], p1: [f64; 3], radius: f64) -> Self {
        Capsule {
            segment: [Point3::from(p0), Point3::from(p1)],
            radius,
        }
    }
}
