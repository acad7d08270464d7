// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use nalgebra::{Matrix6xX, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::KinematicsError;
use crate::pose::Pose;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub name: String,
    pub kind: JointType,
    /// Transform from the parent link frame to the joint frame at zero position.
    pub origin: Pose,
    /// Motion axis in the joint frame.
    pub axis: Unit<Vector3<f64>>,
    pub limits: (f64, f64),
}

impl Joint {
    /// Joint frame displacement for position `q`.
    pub fn motion(&self, q: f64) -> Pose {
        match self.kind {
            JointType::Revolute => Pose::from_parts(
                Translation3::identity(),
                UnitQuaternion::from_axis_angle(&self.axis, q),
            ),
            JointType::Prismatic => Pose::from_parts(
                Translation3::from(self.axis.into_inner() * q),
                UnitQuaternion::identity(),
            ),
        }
    }

    pub fn within_limits(&self, q: f64) -> bool {
        q >= self.limits.0 && q <= self.limits.1
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.limits.0, self.limits.1)
    }
}

/// Joint name → position (rad or m).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub BTreeMap<String, f64>);

impl JointConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Self {
        Self(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

/// Unbranched chain of joints from `base_frame` to `tip_frame`, with an
/// optional fixed tool transform after the last joint.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicChain {
    pub base_frame: String,
    pub tip_frame: String,
    joints: Vec<Joint>,
    tool: Pose,
}

impl KinematicChain {
    pub fn new(
        base_frame: impl Into<String>,
        tip_frame: impl Into<String>,
        joints: Vec<Joint>,
    ) -> Result<Self, KinematicsError> {
        let mut seen = std::collections::HashSet::new();
        for j in &joints {
            if !seen.insert(j.name.as_str()) {
                return Err(KinematicsError::InvalidModel(format!("duplicate joint {:?}", j.name)));
            }
            if !(j.limits.0 <= j.limits.1) {
                return Err(KinematicsError::InvalidModel(format!(
                    "joint {:?} has lower limit above upper limit",
                    j.name
                )));
            }
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(KinematicsError::InvalidModel(format!("joint {:?} axis is not unit", j.name)));
            }
        }
        Ok(Self {
            base_frame: base_frame.into(),
            tip_frame: tip_frame.into(),
            joints,
            tool: Pose::identity(),
        })
    }

    /// Same chain with `tool` appended after the tip (e.g. a TCP offset).
    pub fn with_tool(&self, tool: Pose) -> Self {
        Self {
            tool,
            ..self.clone()
        }
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn tool(&self) -> &Pose {
        &self.tool
    }

    /// Ordered joint values, failing on the first missing name.
    pub fn values(&self, q: &JointConfig) -> Result<Vec<f64>, KinematicsError> {
        self.joints
            .iter()
            .map(|j| q.get(&j.name).ok_or_else(|| KinematicsError::IncompleteConfig(j.name.clone())))
            .collect()
    }

    pub fn config(&self, values: &[f64]) -> JointConfig {
        JointConfig(self.joints.iter().zip(values).map(|(j, v)| (j.name.clone(), *v)).collect())
    }

    pub fn within_limits(&self, values: &[f64]) -> bool {
        self.joints.iter().zip(values).all(|(j, &v)| j.within_limits(v))
    }

    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<Pose, KinematicsError> {
        Ok(self.fk(&self.values(q)?))
    }

    pub fn jacobian(&self, q: &JointConfig) -> Result<Matrix6xX<f64>, KinematicsError> {
        Ok(self.jacobian_at(&self.values(q)?))
    }

    /// Tip pose (including tool) for ordered joint values.
    pub fn fk(&self, values: &[f64]) -> Pose {
        let mut t = Pose::identity();
        for (j, &v) in self.joints.iter().zip(values) {
            t = t * j.origin * j.motion(v);
        }
        t * self.tool
    }

    /// Geometric Jacobian in the base frame: rows 0..3 linear, 3..6 angular.
    pub fn jacobian_at(&self, values: &[f64]) -> Matrix6xX<f64> {
        let n = self.joints.len();
        let mut axes = Vec::with_capacity(n);
        let mut t = Pose::identity();
        for (j, &v) in self.joints.iter().zip(values) {
            let frame = t * j.origin;
            axes.push((frame.rotation * j.axis.into_inner(), frame.translation.vector));
            t = frame * j.motion(v);
        }
        let tip = (t * self.tool).translation.vector;
        let mut jac = Matrix6xX::zeros(n);
        for (i, (j, (z, p))) in self.joints.iter().zip(axes).enumerate() {
            match j.kind {
                JointType::Revolute => {
                    jac.fixed_view_mut::<3, 1>(0, i).copy_from(&z.cross(&(tip - p)));
                    jac.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
                }
                JointType::Prismatic => {
                    jac.fixed_view_mut::<3, 1>(0, i).copy_from(&z);
                }
            }
        }
        jac
    }

    /// Link frames after each joint (excluding the tool).
    pub fn link_frames(&self, values: &[f64]) -> Vec<Pose> {
        let mut t = Pose::identity();
        self.joints
            .iter()
            .zip(values)
            .map(|(j, &v)| {
                t = t * j.origin * j.motion(v);
                t
            })
            .collect()
    }

    /// Uniform sample within limits; unbounded ranges are folded to ±π.
    pub fn random_values<R: rand::Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.joints
            .iter()
            .map(|j| {
                let lo = j.limits.0.max(-std::f64::consts::PI * 4.0);
                let hi = j.limits.1.min(std::f64::consts::PI * 4.0);
                if hi > lo {
                    rng.gen_range(lo..=hi)
                } else {
                    lo
                }
            })
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    pub fn revolute(name: &str, origin: Pose, axis: Vector3<f64>) -> Joint {
        Joint {
            name: name.into(),
            kind: JointType::Revolute,
            origin,
            axis: Unit::new_normalize(axis),
            limits: (-std::f64::consts::PI, std::f64::consts::PI),
        }
    }

    /// Planar arm in the xy-plane with unit links along x.
    pub fn planar_2link() -> KinematicChain {
        KinematicChain::new(
            "base",
            "tip",
            vec![
                revolute("j1", Pose::identity(), Vector3::z()),
                revolute("j2", Pose::translation(1.0, 0.0, 0.0), Vector3::z()),
            ],
        )
        .unwrap()
        .with_tool(Pose::translation(1.0, 0.0, 0.0))
    }

    fn q2(a: f64, b: f64) -> JointConfig {
        JointConfig::from_pairs([("j1", a), ("j2", b)])
    }

    #[test]
    fn identity_chain_zero_config_is_identity() {
        let chain = KinematicChain::new(
            "b",
            "t",
            vec![revolute("a", Pose::identity(), Vector3::x()), revolute("b", Pose::identity(), Vector3::y())],
        )
        .unwrap();
        let p = chain.forward_kinematics(&JointConfig::from_pairs([("a", 0.0), ("b", 0.0)])).unwrap();
        assert_eq!(p, Pose::identity());
    }

    #[test]
    fn planar_forward_kinematics() {
        let arm = planar_2link();
        let p = arm.forward_kinematics(&q2(FRAC_PI_2, 0.0)).unwrap();
        assert!((p.translation.vector - Vector3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
        let (_, _, yaw) = p.rotation.euler_angles();
        assert!((yaw - FRAC_PI_2).abs() < 1e-12);
        let p = arm.forward_kinematics(&q2(FRAC_PI_2, -FRAC_PI_2)).unwrap();
        assert!((p.translation.vector - Vector3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn missing_joint_is_reported() {
        let arm = planar_2link();
        let err = arm.forward_kinematics(&JointConfig::from_pairs([("j1", 0.0)])).unwrap_err();
        assert!(matches!(err, KinematicsError::IncompleteConfig(n) if n == "j2"));
    }

    #[test]
    fn planar_jacobian_at_zero() {
        let j = planar_2link().jacobian(&q2(0.0, 0.0)).unwrap();
        assert!((j.fixed_view::<3, 1>(0, 0) - Vector3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
        assert!((j.fixed_view::<3, 1>(3, 0) - Vector3::z()).norm() < 1e-12);
    }

    #[test]
    fn prismatic_columns_have_no_angular_part() {
        let chain = KinematicChain::new(
            "b",
            "t",
            vec![
                revolute("r", Pose::identity(), Vector3::z()),
                Joint {
                    name: "p".into(),
                    kind: JointType::Prismatic,
                    origin: Pose::translation(0.3, 0.0, 0.0),
                    axis: Vector3::x_axis(),
                    limits: (0.0, 0.5),
                },
            ],
        )
        .unwrap();
        let j = chain.jacobian(&JointConfig::from_pairs([("r", 0.4), ("p", 0.2)])).unwrap();
        assert_eq!(j.fixed_view::<3, 1>(3, 1).norm(), 0.0);
    }

    fn finite_difference_jacobian(chain: &KinematicChain, q: &[f64], h: f64) -> Matrix6xX<f64> {
        let mut out = Matrix6xX::zeros(q.len());
        for i in 0..q.len() {
            let (mut qp, mut qm) = (q.to_vec(), q.to_vec());
            qp[i] += h;
            qm[i] -= h;
            let (a, b) = (chain.fk(&qp), chain.fk(&qm));
            let lin = (a.translation.vector - b.translation.vector) / (2.0 * h);
            let ang = (a.rotation * b.rotation.inverse()).scaled_axis() / (2.0 * h);
            out.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
            out.fixed_view_mut::<3, 1>(3, i).copy_from(&ang);
        }
        out
    }

    proptest::proptest! {
        #[test]
        fn jacobian_matches_finite_differences(seed in 0u64..u64::MAX) {
            use rand::SeedableRng;
            let arm = crate::fixtures::reference_arm();
            let q = arm.random_values(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let err = (arm.jacobian_at(&q) - finite_difference_jacobian(&arm, &q, 1e-6)).abs().max();
            proptest::prop_assert!(err < 1e-5, "max deviation {err}");
        }
    }
}
