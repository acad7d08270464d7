// SPDX-License-Identifier: Apache-2.0

//! Distance, ray and containment queries against a [`TriMesh`].

use super::bvh::Aabb;
use super::{GeometryError, Point3, TriMesh, Vector3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestPoint {
    pub point: Point3,
    pub distance: f64,
    pub face: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentQuery {
    /// Closest point on the mesh surface.
    pub mesh_point: Point3,
    /// Closest point on the query segment.
    pub segment_point: Point3,
    pub distance: f64,
    pub face: usize,
}

/// Closest surface point to `query`.
pub fn closest_point(mesh: &TriMesh, query: &Point3) -> Result<ClosestPoint, GeometryError> {
    if mesh.is_empty() {
        return Err(GeometryError::InvalidGeometry("closest_point on empty mesh".into()));
    }
    let mut found = None;
    mesh.bvh().minimize(
        |b| b.distance_to_point(query),
        |face, best| {
            let [a, b, c] = mesh.triangle(face);
            let p = closest_point_on_triangle(query, &a, &b, &c);
            let d = (p - query).norm();
            if d < best {
                found = Some(ClosestPoint { point: p, distance: d, face });
            }
            d
        },
    );
    Ok(found.expect("non-empty mesh yields a closest face"))
}

impl TriMesh {
    /// Minimum distance between the segment `p0`–`p1` and the surface.
    pub fn closest_to_segment(&self, p0: &Point3, p1: &Point3) -> Result<SegmentQuery, GeometryError> {
        if self.is_empty() {
            return Err(GeometryError::InvalidGeometry("segment query on empty mesh".into()));
        }
        let mid = nalgebra::center(p0, p1);
        let half = 0.5 * (p1 - p0).norm();
        let mut found = None;
        self.bvh().minimize(
            |b: &Aabb| (b.distance_to_point(&mid) - half).max(0.0),
            |face, best| {
                let [a, b, c] = self.triangle(face);
                let (sp, tp) = segment_triangle_closest(p0, p1, &a, &b, &c);
                let d = (sp - tp).norm();
                if d < best {
                    found = Some(SegmentQuery {
                        mesh_point: tp,
                        segment_point: sp,
                        distance: d,
                        face,
                    });
                }
                d
            },
        );
        Ok(found.expect("non-empty mesh yields a closest face"))
    }

    /// First intersection of the ray `origin + t·dir` with `t > t_min`.
    pub fn ray_cast(&self, origin: &Point3, dir: &Vector3, t_min: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        self.bvh().ray_candidates(origin, dir, f64::INFINITY, |face| {
            let [a, b, c] = self.triangle(face);
            if let Some(t) = ray_triangle(origin, dir, &a, &b, &c) {
                if t > t_min && best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, face));
                }
            }
        });
        best
    }

    /// Generalized winding number of the surface around `p` (≈1 inside a
    /// closed outward mesh, ≈0 outside).
    pub fn winding_number(&self, p: &Point3) -> f64 {
        let mut total = 0.0;
        for f in self.faces() {
            let a = self.vertices()[f[0]] - p;
            let b = self.vertices()[f[1]] - p;
            let c = self.vertices()[f[2]] - p;
            let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
            let num = a.dot(&b.cross(&c));
            let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
            total += 2.0 * num.atan2(den);
        }
        total / (4.0 * std::f64::consts::PI)
    }

    pub fn contains(&self, p: &Point3) -> bool {
        self.winding_number(p) > 0.5
    }
}

/// Closest point on triangle `abc` to `p` (Voronoi-region walk).
pub(crate) fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Closest points between segments `p1q1` and `p2q2`.
pub(crate) fn segment_segment_closest(p1: &Point3, q1: &Point3, p2: &Point3, q2: &Point3) -> (Point3, Point3) {
    const EPS: f64 = 1e-18;
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let (s, t);
    if a <= EPS && e <= EPS {
        return (*p1, *p2);
    }
    if a <= EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > EPS { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    (p1 + d1 * s, p2 + d2 * t)
}

/// Möller–Trumbore; returns the ray parameter of the hit.
pub(crate) fn ray_triangle(origin: &Point3, dir: &Vector3, a: &Point3, b: &Point3, c: &Point3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = inv * s.dot(&h);
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = inv * dir.dot(&q);
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(inv * e2.dot(&q))
}

/// Closest pair (segment point, triangle point) between segment `p0p1` and triangle `abc`.
pub(crate) fn segment_triangle_closest(
    p0: &Point3,
    p1: &Point3,
    a: &Point3,
    b: &Point3,
    c: &Point3,
) -> (Point3, Point3) {
    let dir = p1 - p0;
    if let Some(t) = ray_triangle(p0, &dir, a, b, c) {
        if (0.0..=1.0).contains(&t) {
            let hit = p0 + dir * t;
            return (hit, hit);
        }
    }
    let mut best = (*p0, closest_point_on_triangle(p0, a, b, c));
    let mut best_d = (best.0 - best.1).norm_squared();
    let mut consider = |pair: (Point3, Point3)| {
        let d = (pair.0 - pair.1).norm_squared();
        if d < best_d {
            best_d = d;
            best = pair;
        }
    };
    consider((*p1, closest_point_on_triangle(p1, a, b, c)));
    for (e0, e1) in [(a, b), (b, c), (c, a)] {
        consider(segment_segment_closest(p0, p1, e0, e1));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{box_mesh, icosphere};

    #[test]
    fn cube_distance_along_axis() {
        let cube = box_mesh(Vector3::new(1.0, 1.0, 1.0));
        let hit = closest_point(&cube, &Point3::new(0.0, 0.0, 5.0)).unwrap();
        assert!((hit.distance - 4.5).abs() < 1e-9);
        assert!((hit.point.z - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vertex_query_has_zero_distance() {
        let sphere = icosphere(1.0, 2);
        let v = sphere.vertices()[7];
        assert!(closest_point(&sphere, &v).unwrap().distance < 1e-12);
    }

    #[test]
    fn sphere_distance_within_chord_tolerance() {
        let sphere = icosphere(1.0, 3);
        // Inscribed faces sit at most (1 - cos θ) inside the true sphere, θ
        // being the largest vertex-to-face-center angle.
        let mut chord = 0.0f64;
        for (f, n) in sphere.faces().iter().zip(sphere.normals()) {
            let plane = sphere.vertices()[f[0]].coords.dot(n);
            chord = chord.max(1.0 - plane);
        }
        let d = closest_point(&sphere, &Point3::new(2.0, 0.0, 0.0)).unwrap().distance;
        assert!(d >= 1.0 - 1e-12 && d <= 1.0 + chord + 1e-12, "{d} vs chord {chord}");
    }

    #[test]
    fn empty_mesh_is_rejected() {
        let empty = TriMesh::new(vec![], vec![]).unwrap();
        assert!(closest_point(&empty, &Point3::origin()).is_err());
    }

    #[test]
    fn segment_crossing_face_has_zero_distance() {
        let cube = box_mesh(Vector3::new(1.0, 1.0, 1.0));
        let q = cube
            .closest_to_segment(&Point3::new(0.1, 0.1, 0.0), &Point3::new(0.1, 0.1, 2.0))
            .unwrap();
        assert!(q.distance < 1e-12);
        let q = cube
            .closest_to_segment(&Point3::new(0.8, -2.0, 0.0), &Point3::new(0.8, 2.0, 0.0))
            .unwrap();
        assert!((q.distance - 0.3).abs() < 1e-12);
    }

    #[test]
    fn ray_cast_and_containment() {
        let cube = box_mesh(Vector3::new(2.0, 2.0, 2.0));
        let (t, face) = cube
            .ray_cast(&Point3::new(0.3, 0.2, 1.0), &-Vector3::z(), 1e-9)
            .unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!((cube.normals()[face] + Vector3::z()).norm() < 1e-12);
        assert!(cube.contains(&Point3::new(0.2, 0.3, -0.4)));
        assert!(!cube.contains(&Point3::new(1.2, 0.3, -0.4)));
    }

    proptest::proptest! {
        #[test]
        fn closest_distance_is_a_lower_bound(
            qx in -3.0..3.0f64, qy in -3.0..3.0f64, qz in -3.0..3.0f64, seed in 0u64..1000,
        ) {
            let sphere = icosphere(1.0, 2);
            let q = Point3::new(qx, qy, qz);
            let best = closest_point(&sphere, &q).unwrap();
            proptest::prop_assert!(((best.point - q).norm() - best.distance).abs() < 1e-12);
            for s in crate::geometry::sample_surface(&sphere, 32, seed).unwrap() {
                proptest::prop_assert!(best.distance <= (q - s.point).norm() + 1e-12);
            }
        }
    }
}
