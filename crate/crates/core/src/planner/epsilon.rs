// SPDX-License-Identifier: Apache-2.0

//! Ferrari-Canny largest-resisted-wrench quality over friction-cone edges.

use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::geometry::hull::{ConvexHull, HullError, HullOptions};
use crate::geometry::Point3;

/// Relative joggle applied to wrenches before hulling; cone edges of one
/// contact are coplanar, which the incremental hull cannot take exactly.
const WRENCH_JOGGLE: f64 = 1e-8;
/// Smaller values are reported as zero (origin on or outside the hull).
const EPSILON_FLOOR: f64 = 1e-9;
/// Singular-value ratio below which the wrenches do not span six dimensions.
const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactPoint {
    pub point: Point3,
    /// Inward (into the object) unit normal.
    pub normal: Vector3<f64>,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactSet {
    pub contacts: Vec<ContactPoint>,
    pub center_of_mass: Point3,
}

/// Any unit vector orthogonal to `n`.
fn orthonormal_pair(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = n.cross(&helper).normalize();
    let t2 = n.cross(&t1);
    (t1, t2)
}

/// Unit force edges of each contact's friction cone and the matching
/// torques scaled by the largest contact distance from the center of mass.
pub fn primitive_wrenches(set: &ContactSet, cone_edges: usize) -> Vec<[f64; 6]> {
    let rho = set
        .contacts
        .iter()
        .map(|c| (c.point - set.center_of_mass).norm())
        .fold(0.0, f64::max);
    let rho = if rho > 0.0 { rho } else { 1.0 };
    let mut out = Vec::with_capacity(set.contacts.len() * cone_edges);
    for c in &set.contacts {
        let n = c.normal.normalize();
        let (t1, t2) = orthonormal_pair(&n);
        let r = c.point - set.center_of_mass;
        for k in 0..cone_edges {
            let th = 2.0 * std::f64::consts::PI * k as f64 / cone_edges as f64;
            let f = (n + c.mu * (th.cos() * t1 + th.sin() * t2)).normalize();
            let tau = r.cross(&f) / rho;
            out.push([f.x, f.y, f.z, tau.x, tau.y, tau.z]);
        }
    }
    out
}

/// Radius of the largest origin-centered ball inside the convex hull of the
/// primitive wrenches, or 0 when the origin is not strictly inside.
pub fn force_closure_epsilon(set: &ContactSet, cone_edges: usize) -> f64 {
    assert!(cone_edges >= 3, "need at least three cone edges");
    if set.contacts.is_empty() {
        return 0.0;
    }
    let wrenches = primitive_wrenches(set, cone_edges);
    if wrenches.len() < 7 {
        return 0.0;
    }
    let m = DMatrix::from_fn(6, wrenches.len(), |r, c| wrenches[c][r]);
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 || sv.min() / smax < RANK_TOLERANCE {
        return 0.0;
    }
    let opts = HullOptions {
        joggle: WRENCH_JOGGLE,
        seed: 0x5eed,
        ..HullOptions::default()
    };
    let hull = match ConvexHull::<6>::build(&wrenches, opts) {
        Ok(h) => h,
        Err(HullError::Degenerate { .. } | HullError::TooFewPoints { .. }) => return 0.0,
        Err(HullError::Numerical { .. }) => {
            match ConvexHull::<6>::build(&wrenches, HullOptions { joggle: 1e3 * WRENCH_JOGGLE, ..opts }) {
                Ok(h) => h,
                Err(_) => return 0.0,
            }
        }
    };
    let eps = hull.facets().iter().map(|f| f.offset).fold(f64::INFINITY, f64::min);
    if eps > EPSILON_FLOOR {
        eps
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contact(p: [f64; 3], n: [f64; 3], mu: f64) -> ContactPoint {
        ContactPoint {
            point: Point3::from(p),
            normal: Vector3::from(n).normalize(),
            mu,
        }
    }

    fn set(contacts: Vec<ContactPoint>) -> ContactSet {
        ContactSet {
            contacts,
            center_of_mass: Point3::origin(),
        }
    }

    #[test]
    fn cone_edges_are_unit_and_at_friction_angle() {
        let s = set(vec![contact([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], 0.5)]);
        for w in primitive_wrenches(&s, 8) {
            let f = Vector3::new(w[0], w[1], w[2]);
            assert!((f.norm() - 1.0).abs() < 1e-12);
            let angle = f.dot(&-Vector3::x()).acos();
            assert!((angle - 0.5f64.atan()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_contact_has_no_closure() {
        for mu in [0.0, 0.3, 1.0] {
            assert_eq!(force_closure_epsilon(&set(vec![contact([0.0, 0.0, 1.0], [0.0, 0.0, -1.0], mu)]), 8), 0.0);
        }
    }

    #[test]
    fn two_point_contacts_leave_axis_torque_unresisted() {
        // Point contacts on a line cannot produce torque about that line.
        let s = set(vec![
            contact([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], 0.5),
            contact([-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0.5),
        ]);
        assert_eq!(force_closure_epsilon(&s, 8), 0.0);
    }

    #[test]
    fn frictionless_parallel_normals_have_no_closure() {
        let s = set(vec![
            contact([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], 0.0),
            contact([1.0, 0.5, 0.0], [-1.0, 0.0, 0.0], 0.0),
            contact([-1.0, 0.0, 0.3], [1.0, 0.0, 0.0], 0.0),
        ]);
        assert_eq!(force_closure_epsilon(&s, 8), 0.0);
    }

    #[test]
    fn sphere_tripod_and_tetrahedral_grasps_close() {
        let tri: Vec<ContactPoint> = (0..3)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                let p = [a.cos(), a.sin(), 0.0];
                contact(p, [-p[0], -p[1], 0.0], 0.5)
            })
            .collect();
        let e3 = force_closure_epsilon(&set(tri.clone()), 8);
        assert!(e3 > 0.0);
        let mut four = tri;
        four.push(contact([0.0, 0.0, 1.0], [0.0, 0.0, -1.0], 0.5));
        let e4 = force_closure_epsilon(&set(four), 8);
        assert!(e4 > 0.0);
    }

    #[test]
    fn four_face_grasp_closes_for_any_friction() {
        let make = |mu| {
            set(vec![
                contact([1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], mu),
                contact([-1.0, 0.2, 0.0], [1.0, 0.0, 0.0], mu),
                contact([0.0, -1.0, 0.3], [0.0, 1.0, 0.0], mu),
                contact([0.0, 1.0, -0.3], [0.0, -1.0, 0.0], mu),
            ])
        };
        for mu in [0.2, 0.5, 0.8] {
            assert!(force_closure_epsilon(&make(mu), 8) > 0.0);
        }
    }
}
