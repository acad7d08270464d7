// SPDX-License-Identifier: Apache-2.0

//! Default generator: approach along sampled surface normals and close the fingers.

use nalgebra::{Rotation3, Unit, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::registry::{hash_params, parse_params, GraspGenerator};
use super::PlannerError;
use crate::geometry::{sample_surface, TriMesh};
use crate::kinematics::{close_fingers, EndEffectorModel, JointType, KinematicsError};
use crate::pose::Pose;
use crate::taskmodel::Grasp;

pub const NAME: &str = "surface_sampling";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceParams {
    pub n_samples: usize,
    pub roll_count: usize,
    /// Gap left between the palm and the sampled surface point (m).
    pub standoff: f64,
    /// Finger closing increment; defaults to 1 mm for all-prismatic hands, else 0.01 rad.
    pub step_size: Option<f64>,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        SurfaceParams {
            n_samples: 200,
            roll_count: 8,
            standoff: 0.005,
            step_size: None,
        }
    }
}

pub struct SurfaceSampling {
    pub params: SurfaceParams,
}

impl SurfaceSampling {
    pub fn new(params: SurfaceParams) -> Result<Self, PlannerError> {
        let p = &params;
        let bad = |m: &str| {
            Err(PlannerError::InvalidParams {
                plugin: NAME.into(),
                message: m.into(),
            })
        };
        if p.n_samples == 0 || p.roll_count == 0 {
            return bad("n_samples and roll_count must be positive");
        }
        if !(p.standoff.is_finite() && p.standoff >= 0.0) {
            return bad("standoff must be non-negative");
        }
        if p.step_size.is_some_and(|s| !(s.is_finite() && s > 0.0)) {
            return bad("step_size must be positive");
        }
        Ok(SurfaceSampling { params })
    }

    pub fn from_params(v: &Value) -> Result<Self, PlannerError> {
        Self::new(parse_params(NAME, v)?)
    }
}

/// Closing increment suited to the hand's joint types.
pub fn default_step_size(ee: &EndEffectorModel) -> f64 {
    let prismatic = ee.fingers.iter().flat_map(|f| &f.joints).all(|j| j.kind == JointType::Prismatic);
    if prismatic {
        0.001
    } else {
        0.01
    }
}

/// How far the palm geometry reaches along the approach (TCP z) axis, in
/// front of the palm origin.
pub fn palm_extent(ee: &EndEffectorModel) -> f64 {
    let approach = ee.tcp_offset.rotation * Vector3::z();
    ee.palm
        .iter()
        .flat_map(|c| c.segment.iter().map(move |p| p.coords.dot(&approach) + c.radius))
        .fold(0.0, f64::max)
}

/// Rotation whose z-axis is `z`, with a fixed choice of x-axis.
pub fn frame_with_z(z: &Unit<Vector3<f64>>) -> UnitQuaternion<f64> {
    let helper = if z.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let x = (helper - z.into_inner() * z.dot(&helper)).normalize();
    let y = z.cross(&x);
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_basis_unchecked(&[x, y, z.into_inner()]))
}

/// Grasp for a hand at `palm`, or `None` when it penetrates or fails to
/// close on the object with at least two fingers.
pub fn try_grasp(ee: &EndEffectorModel, palm: &Pose, object: &TriMesh, step: f64) -> Result<Option<Grasp>, PlannerError> {
    match close_fingers(ee, palm, object, step) {
        Err(KinematicsError::Penetration(_)) => Ok(None),
        Err(e) => Err(e.into()),
        Ok(closure) if closure.contacts.len() >= 2 && closure.fingers_in_contact() >= 2 => {
            let mut g = Grasp::new(palm * ee.tcp_offset, closure.config, ee.name.clone());
            g.contacts = closure.contacts;
            Ok(Some(g))
        }
        Ok(_) => Ok(None),
    }
}

impl GraspGenerator for SurfaceSampling {
    fn name(&self) -> &str {
        NAME
    }

    fn params_hash(&self) -> String {
        hash_params(&self.params)
    }

    fn generate(&self, object: &TriMesh, ee: &EndEffectorModel, seed: u64) -> Result<Vec<Grasp>, PlannerError> {
        let p = &self.params;
        let samples = sample_surface(object, p.n_samples, seed)?;
        let step = p.step_size.unwrap_or_else(|| default_step_size(ee));
        let retreat = palm_extent(ee) + p.standoff;
        let tcp_from_palm = ee.tcp_offset.inverse();
        let per_sample: Vec<Vec<Grasp>> = samples
            .par_iter()
            .map(|s| {
                let approach = Unit::new_normalize(-s.normal);
                let base = frame_with_z(&approach);
                let mut out = Vec::new();
                for r in 0..p.roll_count {
                    let roll = 2.0 * std::f64::consts::PI * r as f64 / p.roll_count as f64;
                    let tcp_rot = UnitQuaternion::from_axis_angle(&approach, roll) * base;
                    // Orientation from the TCP frame; position puts the palm front `standoff` off the surface.
                    let mut palm = Pose::from_parts(Default::default(), tcp_rot) * tcp_from_palm;
                    palm.translation.vector = s.point.coords + s.normal * retreat;
                    if let Some(g) = try_grasp(ee, &palm, object, step)? {
                        out.push(g);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, PlannerError>>()?;
        Ok(per_sample.into_iter().flatten().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{box_mesh, closest_point, icosphere};

    fn generator(n: usize, rolls: usize) -> SurfaceSampling {
        SurfaceSampling::new(SurfaceParams {
            n_samples: n,
            roll_count: rolls,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn cube_grasps_have_opposing_contacts() {
        let cube = box_mesh(Vector3::new(0.04, 0.04, 0.04));
        let ee = fixtures::parallel_gripper();
        let grasps = generator(200, 4).generate(&cube, &ee, 3).unwrap();
        assert!(!grasps.is_empty());
        for g in &grasps {
            assert!(g.contacts.len() >= 2);
            let opposing = g
                .contacts
                .iter()
                .any(|a| g.contacts.iter().any(|b| a.normal.dot(&b.normal) < 0.0));
            assert!(opposing, "{:#?} {:?}", g.contacts, g.tcp_in_object);
            for c in &g.contacts {
                assert!(closest_point(&cube, &c.point).unwrap().distance < 1e-9);
            }
            assert!(ee.within_limits(&g.finger_config));
        }
    }

    #[test]
    fn oversized_sphere_yields_nothing() {
        let ball = icosphere(0.3, 2);
        let grasps = generator(50, 4).generate(&ball, &fixtures::parallel_gripper(), 1).unwrap();
        assert!(grasps.is_empty());
    }

    #[test]
    fn tcp_approach_opposes_sample_normal() {
        let cube = box_mesh(Vector3::new(0.04, 0.04, 0.04));
        let ee = fixtures::parallel_gripper();
        for g in generator(40, 2).generate(&cube, &ee, 9).unwrap() {
            let z = g.tcp_in_object.rotation * Vector3::z();
            // Approach runs into the object through one of the axis-aligned faces.
            assert!(z.iter().any(|v| (v.abs() - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn palm_extent_of_reference_gripper() {
        assert!((palm_extent(&fixtures::parallel_gripper()) - 0.01).abs() < 1e-15);
    }
}
