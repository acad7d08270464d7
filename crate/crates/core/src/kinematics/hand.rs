// SPDX-License-Identifier: Apache-2.0

//! End-effector model and finger-closing contact simulation.

use serde::{Deserialize, Serialize};

use super::{Joint, JointConfig, JointType, KinematicsError};
use crate::geometry::{closest_point, Point3, TriMesh, Vector3};
use crate::pose::Pose;

/// A link within this distance of the surface (beyond its radius) is in contact.
pub const CONTACT_EPSILON: f64 = 1e-4;

/// Distinct contact points on one link are at least this far apart (m).
const CONTACT_MERGE_DISTANCE: f64 = 1e-3;

/// Intervals along a touching link's axis probed for the extent of a line contact.
const CONTACT_AXIS_SAMPLES: usize = 10;

/// Sphere-swept segment in a link frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    pub segment: [Point3; 2],
    pub radius: f64,
}

impl Capsule {
    pub fn transformed(&self, pose: &Pose) -> (Point3, Point3) {
        (pose * self.segment[0], pose * self.segment[1])
    }
}

/// A serial finger: joints from the palm outwards, one capsule link per joint.
#[derive(Clone, Debug, PartialEq)]
pub struct Finger {
    pub joints: Vec<Joint>,
    pub open: Vec<f64>,
    pub closed: Vec<f64>,
    pub links: Vec<Capsule>,
}

impl Finger {
    /// Link frames in the palm frame for joint values `q`.
    pub fn link_frames(&self, q: &[f64]) -> Vec<Pose> {
        let mut t = Pose::identity();
        self.joints
            .iter()
            .zip(q)
            .map(|(j, &v)| {
                t = t * j.origin * j.motion(v);
                t
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EndEffectorModel {
    pub name: String,
    pub palm_frame: String,
    /// TCP (grasp reference frame) relative to the palm. By convention the
    /// TCP z-axis is the approach direction.
    pub tcp_offset: Pose,
    /// Palm collision geometry in the palm frame.
    pub palm: Vec<Capsule>,
    pub fingers: Vec<Finger>,
}

impl EndEffectorModel {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        let bad = |m: String| Err(KinematicsError::InvalidModel(format!("end effector {:?}: {m}", self.name)));
        if self.fingers.is_empty() {
            return bad("needs at least one finger".into());
        }
        if !self.tcp_offset.translation.vector.iter().all(|v| v.is_finite()) {
            return bad("TCP offset is not finite".into());
        }
        for (i, f) in self.fingers.iter().enumerate() {
            let n = f.joints.len();
            if n == 0 || f.open.len() != n || f.closed.len() != n || f.links.len() != n {
                return bad(format!("finger {i} needs equal-length joints/open/closed/links"));
            }
            for ((j, &o), &c) in f.joints.iter().zip(&f.open).zip(&f.closed) {
                if !j.within_limits(o) || !j.within_limits(c) {
                    return bad(format!("finger {i} joint {:?} open/closed outside limits", j.name));
                }
            }
            if f.links.iter().any(|l| !(l.radius > 0.0)) {
                return bad(format!("finger {i} has a non-positive link radius"));
            }
        }
        Ok(())
    }

    pub fn finger_joint_names(&self) -> impl Iterator<Item = &str> {
        self.fingers.iter().flat_map(|f| f.joints.iter().map(|j| j.name.as_str()))
    }

    pub fn open_config(&self) -> JointConfig {
        self.config_from(|f| &f.open)
    }

    pub fn closed_config(&self) -> JointConfig {
        self.config_from(|f| &f.closed)
    }

    fn config_from(&self, pick: impl Fn(&Finger) -> &Vec<f64>) -> JointConfig {
        let mut c = JointConfig::new();
        for f in &self.fingers {
            for (j, v) in f.joints.iter().zip(pick(f)) {
                c.set(j.name.clone(), *v);
            }
        }
        c
    }

    pub fn within_limits(&self, c: &JointConfig) -> bool {
        self.fingers.iter().flat_map(|f| &f.joints).all(|j| c.get(&j.name).is_some_and(|v| j.within_limits(v)))
    }

    /// `Some` when the hand is a parallel gripper: exactly two single-joint
    /// prismatic fingers closing towards each other.
    pub fn parallel_jaw(&self) -> Option<ParallelJaw> {
        if self.fingers.len() != 2 {
            return None;
        }
        let mut sides = Vec::with_capacity(2);
        for f in &self.fingers {
            if f.joints.len() != 1 || f.joints[0].kind != JointType::Prismatic {
                return None;
            }
            sides.push((&f.joints[0], f.open[0], f.closed[0], f.links[0]));
        }
        let dir = |(j, o, c, _): &(&Joint, f64, f64, Capsule)| j.origin.rotation * j.axis.into_inner() * (c - o);
        let (d0, d1) = (dir(&sides[0]), dir(&sides[1]));
        if d0.norm() == 0.0 || d1.norm() == 0.0 || d0.normalize().dot(&d1.normalize()) > -0.999 {
            return None;
        }
        let closing_axis = nalgebra::Unit::new_normalize(d0);
        let pos = |s: &(&Joint, f64, f64, Capsule), q: f64| {
            let frame = s.0.origin * s.0.motion(q);
            let mid = nalgebra::center(&s.3.segment[0], &s.3.segment[1]);
            (frame * mid).coords.dot(&closing_axis)
        };
        // Finger 0 sits on the negative side of the closing axis.
        let open_gap = pos(&sides[1], sides[1].1) - pos(&sides[0], sides[0].1) - sides[0].3.radius - sides[1].3.radius;
        Some(ParallelJaw {
            closing_axis,
            max_opening: open_gap,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParallelJaw {
    /// Unit direction (palm frame) in which finger 0 moves when closing.
    pub closing_axis: nalgebra::Unit<Vector3>,
    /// Free gap between the finger surfaces when fully open (m).
    pub max_opening: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub point: Point3,
    /// Outward surface normal at the contact.
    pub normal: Vector3,
    pub finger: usize,
    pub link: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FingerClosure {
    pub config: JointConfig,
    pub contacts: Vec<Contact>,
}

impl FingerClosure {
    /// Number of distinct fingers touching the object.
    pub fn fingers_in_contact(&self) -> usize {
        let mut f: Vec<usize> = self.contacts.iter().map(|c| c.finger).collect();
        f.sort_unstable();
        f.dedup();
        f.len()
    }
}

/// Signed clearance between a capsule and the surface: negative when the
/// capsule crosses or lies inside the surface.
fn clearance(object: &TriMesh, a: &Point3, b: &Point3, radius: f64, check_inside: bool) -> Result<f64, KinematicsError> {
    let q = object.closest_to_segment(a, b)?;
    if check_inside && q.distance > 0.0 && object.contains(a) {
        return Ok(-(q.distance + radius));
    }
    Ok(q.distance - radius)
}

/// Closes every finger from its open towards its closed configuration in
/// increments of `step_size` (rad or m per joint). A link that comes within
/// [`CONTACT_EPSILON`] of the object stops, together with the joints
/// proximal to it; distal joints keep closing. Steps that would push a link
/// into the object are bisected back to the contact band.
///
/// `hand_pose` is the palm pose in the object mesh's frame.
pub fn close_fingers(
    ee: &EndEffectorModel,
    hand_pose: &Pose,
    object: &TriMesh,
    step_size: f64,
) -> Result<FingerClosure, KinematicsError> {
    assert!(step_size > 0.0, "step_size must be positive");
    if object.is_empty() {
        return Err(crate::geometry::GeometryError::InvalidGeometry("empty object mesh".into()).into());
    }
    for (i, cap) in ee.palm.iter().enumerate() {
        let (a, b) = cap.transformed(hand_pose);
        if clearance(object, &a, &b, cap.radius, true)? < 0.0 {
            return Err(KinematicsError::Penetration(format!("palm capsule {i}")));
        }
    }
    let mut config = JointConfig::new();
    let mut contacts = Vec::new();
    for (fi, finger) in ee.fingers.iter().enumerate() {
        let n = finger.joints.len();
        let link_clearances = |q: &[f64], from: usize, inside: bool| -> Result<Vec<(usize, f64)>, KinematicsError> {
            let frames = finger.link_frames(q);
            (from..n)
                .map(|k| {
                    let (a, b) = finger.links[k].transformed(&(hand_pose * frames[k]));
                    Ok((k, clearance(object, &a, &b, finger.links[k].radius, inside)?))
                })
                .collect()
        };
        let mut q = finger.open.clone();
        let mut frozen = vec![false; n];
        let mut touching = vec![false; n];
        for (k, c) in link_clearances(&q, 0, true)? {
            if c < -CONTACT_EPSILON {
                return Err(KinematicsError::Penetration(format!("finger {fi} link {k} at open configuration")));
            }
            if c <= CONTACT_EPSILON {
                touching[k] = true;
                frozen[..=k].iter_mut().for_each(|f| *f = true);
            }
        }
        loop {
            let active: Vec<usize> = (0..n).filter(|&j| !frozen[j] && q[j] != finger.closed[j]).collect();
            let Some(&first) = active.first() else { break };
            let mut next = q.clone();
            for &j in &active {
                let (cur, goal) = (q[j], finger.closed[j]);
                next[j] = if goal > cur { (cur + step_size).min(goal) } else { (cur - step_size).max(goal) };
            }
            let lerp = |t: f64| -> Vec<f64> { q.iter().zip(&next).map(|(a, b)| a + (b - a) * t).collect() };
            let min_clear = |qs: &[f64]| -> Result<f64, KinematicsError> {
                Ok(link_clearances(qs, first, false)?.into_iter().map(|(_, c)| c).fold(f64::INFINITY, f64::min))
            };
            let accepted = if min_clear(&next)? >= -CONTACT_EPSILON {
                next.clone()
            } else {
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let c = min_clear(&lerp(mid))?;
                    if c < -CONTACT_EPSILON {
                        hi = mid;
                    } else {
                        lo = mid;
                        if c <= CONTACT_EPSILON {
                            break;
                        }
                    }
                }
                lerp(lo)
            };
            let mut progressed = accepted != q;
            q = accepted;
            for (k, c) in link_clearances(&q, first, false)? {
                if c <= CONTACT_EPSILON && !touching[k] {
                    touching[k] = true;
                    frozen[..=k].iter_mut().for_each(|f| *f = true);
                    progressed = true;
                }
            }
            if !progressed {
                // Pinned without reaching the contact band; stop this finger.
                frozen.iter_mut().for_each(|f| *f = true);
            }
        }
        let frames = finger.link_frames(&q);
        for k in (0..n).filter(|&k| touching[k]) {
            let cap = &finger.links[k];
            let (a, b) = cap.transformed(&(hand_pose * frames[k]));
            let mut link_contacts: Vec<Contact> = Vec::new();
            // Contact normal points from the surface to the capsule axis, which
            // is the face normal on faces and inside the normal cone at edges.
            let mut push = |point: Point3, axis_point: Point3, face: usize| {
                if link_contacts.iter().all(|c| (c.point - point).norm() >= CONTACT_MERGE_DISTANCE) {
                    let d = axis_point - point;
                    let normal = if d.norm() > 1e-12 { d.normalize() } else { object.normals()[face] };
                    link_contacts.push(Contact {
                        point,
                        normal,
                        finger: fi,
                        link: k,
                    });
                }
            };
            let seg = object.closest_to_segment(&a, &b)?;
            push(seg.mesh_point, seg.segment_point, seg.face);
            // A link lying flat on a face touches along a stretch of its axis;
            // the ends of that stretch bound the contact.
            let touching_axis: Vec<(Point3, Point3, usize)> = (0..=CONTACT_AXIS_SAMPLES)
                .map(|i| a + (b - a) * (i as f64 / CONTACT_AXIS_SAMPLES as f64))
                .map(|p| closest_point(object, &p).map(|cp| (p, cp)))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .filter(|(_, cp)| cp.distance <= cap.radius + CONTACT_EPSILON)
                .map(|(p, cp)| (cp.point, p, cp.face))
                .collect();
            if let (Some(first), Some(last)) = (touching_axis.first(), touching_axis.last()) {
                push(first.0, first.1, first.2);
                push(last.0, last.1, last.2);
            }
            contacts.extend(link_contacts);
        }
        for (j, v) in finger.joints.iter().zip(&q) {
            config.set(j.name.clone(), *v);
        }
    }
    Ok(FingerClosure { config, contacts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::geometry::{box_mesh, icosphere};
    use nalgebra::{Translation3, UnitQuaternion};

    /// Palm capsule radius plus the default standoff.
    const PALM_CLEARANCE: f64 = 0.015;

    /// Palm pose approaching `+z` face of an object centered at the origin.
    fn top_down(palm_height: f64) -> Pose {
        // TCP z (approach) points along -z of the object.
        Pose::from_parts(
            Translation3::new(0.0, 0.0, palm_height),
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI),
        )
    }

    #[test]
    fn far_object_leaves_fingers_closed() {
        let ee = fixtures::parallel_gripper();
        let cube = box_mesh(Vector3::new(0.04, 0.04, 0.04));
        let c = close_fingers(&ee, &top_down(1.0), &cube, 0.001).unwrap();
        assert!(c.contacts.is_empty());
        assert_eq!(c.config, ee.closed_config());
    }

    #[test]
    fn parallel_gripper_pinches_cube_on_opposite_faces() {
        let ee = fixtures::parallel_gripper();
        let cube = box_mesh(Vector3::new(0.04, 0.04, 0.04));
        let pose = top_down(0.02 + PALM_CLEARANCE);
        let c = close_fingers(&ee, &pose, &cube, 0.001).unwrap();
        assert_eq!(c.fingers_in_contact(), 2);
        let n0 = c.contacts.iter().find(|c| c.finger == 0).unwrap().normal;
        let n1 = c.contacts.iter().find(|c| c.finger == 1).unwrap().normal;
        assert!(n0.dot(&n1) < -0.99);
        for contact in &c.contacts {
            let d = closest_point(&cube, &contact.point).unwrap().distance;
            assert!(d < 1e-12);
        }
        // Clearance invariant: no link left inside the object.
        let frames_ok = ee.fingers.iter().enumerate().all(|(fi, f)| {
            let q: Vec<f64> = f.joints.iter().map(|j| c.config.get(&j.name).unwrap()).collect();
            f.link_frames(&q).iter().zip(&f.links).all(|(fr, cap)| {
                let (a, b) = cap.transformed(&(pose * fr));
                let s = cube.closest_to_segment(&a, &b).unwrap();
                let ok = s.distance - cap.radius >= -CONTACT_EPSILON;
                if !ok {
                    eprintln!("finger {fi} penetrates");
                }
                ok
            })
        });
        assert!(frames_ok);
    }

    #[test]
    fn oversized_sphere_penetrates_at_open_configuration() {
        let ee = fixtures::parallel_gripper();
        let ball = icosphere(0.2, 2);
        let err = close_fingers(&ee, &top_down(0.2 + PALM_CLEARANCE), &ball, 0.001).unwrap_err();
        assert!(matches!(err, KinematicsError::Penetration(_)));
    }

    #[test]
    fn parallel_jaw_geometry() {
        let jaw = fixtures::parallel_gripper().parallel_jaw().unwrap();
        assert!((jaw.max_opening - 0.08).abs() < 1e-12);
    }
}
