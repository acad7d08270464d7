// SPDX-License-Identifier: Apache-2.0

//! Parallel-jaw generator: contact pairs inside each other's friction cones.

use nalgebra::{Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::registry::{hash_params, parse_params, GraspGenerator};
use super::surface::{default_step_size, try_grasp};
use super::PlannerError;
use crate::geometry::{sample_surface, Point3, TriMesh};
use crate::kinematics::EndEffectorModel;
use crate::pose::Pose;
use crate::taskmodel::Grasp;

pub const NAME: &str = "antipodal";

/// Slack on the friction-cone test, covering rounding in the ray cast.
const CONE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AntipodalParams {
    /// Surface samples, each giving at most one contact pair.
    pub n_pairs: usize,
    pub mu: f64,
    /// Hand orientations tried about each pair's closing axis.
    pub approach_count: usize,
    /// Added to the planner seed.
    pub seed: u64,
}

impl Default for AntipodalParams {
    fn default() -> Self {
        AntipodalParams {
            n_pairs: 200,
            mu: 0.5,
            approach_count: 8,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactPair {
    pub p1: Point3,
    pub n1: Vector3<f64>,
    pub p2: Point3,
    pub n2: Vector3<f64>,
}

pub struct Antipodal {
    pub params: AntipodalParams,
}

impl Antipodal {
    pub fn new(params: AntipodalParams) -> Result<Self, PlannerError> {
        if params.n_pairs == 0 || params.approach_count == 0 || !(params.mu.is_finite() && params.mu >= 0.0) {
            return Err(PlannerError::InvalidParams {
                plugin: NAME.into(),
                message: "n_pairs and approach_count must be positive and mu non-negative".into(),
            });
        }
        Ok(Antipodal { params })
    }

    pub fn from_params(v: &Value) -> Result<Self, PlannerError> {
        Self::new(parse_params(NAME, v)?)
    }

    /// Surface point pairs that satisfy both friction cones and fit the jaw.
    pub fn contact_pairs(&self, object: &TriMesh, max_width: f64, seed: u64) -> Result<Vec<ContactPair>, PlannerError> {
        let seed = seed.wrapping_add(self.params.seed);
        let samples = sample_surface(object, self.params.n_pairs, seed)?;
        let half_angle = self.params.mu.atan();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_5A5A);
        let mut pairs = Vec::new();
        for s in samples {
            // Ray into the object, tilted uniformly within the contact's cone.
            let (tilt, spin): (f64, f64) = (rng.gen_range(0.0..=1.0), rng.gen_range(0.0..std::f64::consts::TAU));
            let inward = -s.normal;
            let t1 = inward.cross(&if inward.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() }).normalize();
            let t2 = inward.cross(&t1);
            let a = tilt * half_angle;
            let dir = inward * a.cos() + (t1 * spin.cos() + t2 * spin.sin()) * a.sin();
            let Some((t, face)) = object.ray_cast(&s.point, &dir, 1e-9) else {
                continue;
            };
            let p2 = s.point + dir * t;
            let n2 = object.normals()[face];
            let d = p2 - s.point;
            let width = d.norm();
            if width == 0.0 || width > max_width {
                continue;
            }
            let u = d / width;
            let ok1 = u.dot(&inward).clamp(-1.0, 1.0).acos() <= half_angle + CONE_SLACK;
            let ok2 = u.dot(&n2).clamp(-1.0, 1.0).acos() <= half_angle + CONE_SLACK;
            if ok1 && ok2 {
                pairs.push(ContactPair {
                    p1: s.point,
                    n1: s.normal,
                    p2,
                    n2,
                });
            }
        }
        Ok(pairs)
    }
}

impl GraspGenerator for Antipodal {
    fn name(&self) -> &str {
        NAME
    }

    fn params_hash(&self) -> String {
        hash_params(&self.params)
    }

    fn generate(&self, object: &TriMesh, ee: &EndEffectorModel, seed: u64) -> Result<Vec<Grasp>, PlannerError> {
        let jaw = ee.parallel_jaw().ok_or_else(|| PlannerError::InvalidParams {
            plugin: NAME.into(),
            message: format!("end effector {:?} is not a two-finger prismatic gripper", ee.name),
        })?;
        let pairs = self.contact_pairs(object, jaw.max_opening, seed)?;
        // Closing axis and approach axis in the TCP frame.
        let closing = ee.tcp_offset.rotation.inverse() * jaw.closing_axis.into_inner();
        let approach = Vector3::z();
        if closing.dot(&approach).abs() > 1e-9 {
            return Err(PlannerError::InvalidParams {
                plugin: NAME.into(),
                message: "closing axis must be orthogonal to the TCP approach axis".into(),
            });
        }
        let local = Matrix3::from_columns(&[closing, approach, closing.cross(&approach)]);
        let step = default_step_size(ee);
        let centroid = object.centroid();
        let tcp_to_palm = ee.tcp_offset.inverse();
        let count = self.params.approach_count;
        let per_pair: Vec<Vec<Grasp>> = pairs
            .par_iter()
            .map(|pair| {
                let u = Unit::new_normalize(pair.p2 - pair.p1);
                let center = nalgebra::center(&pair.p1, &pair.p2);
                // First approach points from the outside in, through the pair center.
                let outward = center - centroid;
                let mut a0 = -(outward - u.into_inner() * outward.dot(&u));
                if a0.norm() < 1e-9 {
                    let helper = if u.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
                    a0 = helper - u.into_inner() * u.dot(&helper);
                }
                let a0 = a0.normalize();
                let mut out = Vec::new();
                for k in 0..count {
                    let spin = UnitQuaternion::from_axis_angle(&u, std::f64::consts::TAU * k as f64 / count as f64);
                    let a = spin * a0;
                    let world = Matrix3::from_columns(&[u.into_inner(), a, u.cross(&a)]);
                    let rot = Rotation3::from_matrix_unchecked(world * local.transpose());
                    let tcp = Pose::from_parts(center.coords.into(), UnitQuaternion::from_rotation_matrix(&rot));
                    if let Some(g) = try_grasp(ee, &(tcp * tcp_to_palm), object, step)? {
                        out.push(g);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_, PlannerError>>()?;
        Ok(per_pair.into_iter().flatten().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{box_mesh, icosphere};

    fn gen(mu: f64, n: usize) -> Antipodal {
        Antipodal::new(AntipodalParams {
            n_pairs: n,
            mu,
            approach_count: 4,
            seed: 0,
        })
        .unwrap()
    }

    #[test]
    fn unit_box_pairs_span_opposite_faces() {
        let cube = box_mesh(Vector3::new(1.0, 1.0, 1.0));
        let pairs = gen(0.5, 300).contact_pairs(&cube, 1.2, 4).unwrap();
        assert!(!pairs.is_empty());
        for p in &pairs {
            assert!(p.n1.dot(&p.n2) < -0.999);
        }
        let grasps = gen(0.5, 60).generate(&cube, &fixtures::parallel_gripper_with_opening(1.2), 4).unwrap();
        assert!(!grasps.is_empty());
        for g in &grasps {
            let opposed = g.contacts.iter().any(|a| g.contacts.iter().any(|b| a.normal.dot(&b.normal) < 0.0));
            assert!(opposed, "{:#?}", g.contacts);
        }
    }

    #[test]
    fn frictionless_sphere_pairs_are_diametral() {
        let ball = icosphere(0.5, 3);
        let pairs = gen(0.0, 200).contact_pairs(&ball, 2.0, 7).unwrap();
        assert!(!pairs.is_empty());
        // Deepest facet plane below the sphere radius.
        let depth = (0..ball.faces().len())
            .map(|f| 0.5 - ball.normals()[f].dot(&ball.triangle(f)[0].coords))
            .fold(0.0, f64::max);
        for p in &pairs {
            let w = (p.p2 - p.p1).norm();
            assert!(w <= 1.0 && w >= 1.0 - 2.0 * depth - 1e-12, "width {w}");
            assert!(p.n1.dot(&p.n2) < -1.0 + 1e-9);
        }
    }

    #[test]
    fn narrow_gripper_gets_nothing() {
        let cube = box_mesh(Vector3::new(0.1, 0.1, 0.1));
        assert!(gen(0.5, 100).generate(&cube, &fixtures::parallel_gripper(), 1).unwrap().is_empty());
    }
}
