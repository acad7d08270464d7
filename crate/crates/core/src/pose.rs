// SPDX-License-Identifier: Apache-2.0

//! Rigid poses and their JSON form.

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

/// Position (m) plus unit-quaternion orientation.
pub type Pose = Isometry3<f64>;

/// Serialized pose: `{"xyz": [..], "quat": [x, y, z, w]}`. On input `rpy`
/// (fixed-axis roll/pitch/yaw, radians) may be given instead of `quat`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseDoc {
    pub xyz: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quat: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpy: Option<[f64; 3]>,
}

impl PoseDoc {
    pub fn to_pose(&self) -> Result<Pose, String> {
        if !self.xyz.iter().all(|v| v.is_finite()) {
            return Err("non-finite position".into());
        }
        let rotation = match (self.quat, self.rpy) {
            (Some(_), Some(_)) => return Err("give either quat or rpy, not both".into()),
            (Some([x, y, z, w]), None) => {
                let q = Quaternion::new(w, x, y, z);
                let n = q.norm();
                if !n.is_finite() || (n - 1.0).abs() > 1e-6 {
                    return Err(format!("quaternion norm {n} is not 1"));
                }
                if (n - 1.0).abs() <= 1e-14 {
                    // Keep serialized unit quaternions bit-exact.
                    UnitQuaternion::new_unchecked(q)
                } else {
                    UnitQuaternion::from_quaternion(q)
                }
            }
            (None, Some([r, p, y])) => {
                if ![r, p, y].iter().all(|v| v.is_finite()) {
                    return Err("non-finite rpy".into());
                }
                UnitQuaternion::from_euler_angles(r, p, y)
            }
            (None, None) => UnitQuaternion::identity(),
        };
        Ok(Pose::from_parts(Translation3::from(Vector3::from(self.xyz)), rotation))
    }
}

impl From<&Pose> for PoseDoc {
    fn from(p: &Pose) -> Self {
        let q = p.rotation.quaternion();
        PoseDoc {
            xyz: p.translation.vector.into(),
            quat: Some([q.i, q.j, q.k, q.w]),
            rpy: None,
        }
    }
}

/// Serde adapter for fields of type [`Pose`].
pub mod serde_pose {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Pose, s: S) -> Result<S::Ok, S::Error> {
        PoseDoc::from(p).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Pose, D::Error> {
        PoseDoc::deserialize(d)?.to_pose().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Pose>`.
pub mod serde_poses {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &[Pose], s: S) -> Result<S::Ok, S::Error> {
        p.iter().map(PoseDoc::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Pose>, D::Error> {
        Vec::<PoseDoc>::deserialize(d)?
            .iter()
            .map(|p| p.to_pose().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Geodesic angle (rad) between two orientations.
pub fn rotation_distance(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    a.angle_to(b)
}

/// `(position error m, rotation error rad)` between two poses.
pub fn pose_error(a: &Pose, b: &Pose) -> (f64, f64) {
    (
        (a.translation.vector - b.translation.vector).norm(),
        rotation_distance(&a.rotation, &b.rotation),
    )
}

/// Builds a pose from position and fixed-axis roll/pitch/yaw.
pub fn pose_xyz_rpy(xyz: [f64; 3], rpy: [f64; 3]) -> Pose {
    Pose::from_parts(
        Translation3::new(xyz[0], xyz[1], xyz[2]),
        UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rpy_input_is_normalized_to_quat_output() {
        let doc = PoseDoc {
            xyz: [1.0, 2.0, 3.0],
            quat: None,
            rpy: Some([0.1, -0.2, 0.3]),
        };
        let pose = doc.to_pose().unwrap();
        let back = PoseDoc::from(&pose);
        assert!(back.rpy.is_none());
        let again = back.to_pose().unwrap();
        let (dp, dr) = pose_error(&pose, &again);
        assert!(dp < 1e-12 && dr < 1e-12);
    }

    #[test]
    fn bad_quaternion_rejected() {
        let doc = PoseDoc {
            xyz: [0.0; 3],
            quat: Some([0.0, 0.0, 0.0, 2.0]),
            rpy: None,
        };
        assert!(doc.to_pose().is_err());
    }
}
