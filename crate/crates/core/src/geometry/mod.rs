// SPDX-License-Identifier: Apache-2.0

//! Object geometry: triangle meshes, point clouds, and the queries the
//! grasp pipeline runs against them.

mod bvh;
mod cloud;
mod digest;
pub mod hull;
mod io;
mod mesh;
mod primitives;
mod query;
mod sampling;

pub use cloud::{crop_cloud, PointCloud, RoiBox};
pub use digest::{mesh_digest, MeshDigest};
pub use io::{load_mesh, parse_obj, parse_stl_binary, write_stl_binary};
pub use mesh::{TriMesh, DEGENERATE_AREA};
pub use primitives::{box_mesh, cylinder_mesh, icosphere, revolve_profile};
pub use query::{closest_point, ClosestPoint, SegmentQuery};
pub use sampling::{sample_surface, SurfaceSample};

use thiserror::Error;

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("mesh reconstruction failed: {reason} ({points} points)")]
    Reconstruction { reason: String, points: usize },
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Convex hull reconstruction of a cloud as a closed mesh with outward normals.
pub fn reconstruct_mesh(cloud: &PointCloud) -> Result<TriMesh, GeometryError> {
    let n = cloud.points().len();
    if n < 4 {
        return Err(GeometryError::Reconstruction {
            reason: "need at least 4 points".into(),
            points: n,
        });
    }
    let pts: Vec<[f64; 3]> = cloud.points().iter().map(|p| [p.x, p.y, p.z]).collect();
    // Collinear runs on the hull can produce sliver facets; a sub-nanometre
    // joggle resolves them without visibly moving the surface.
    let hull = match hull::ConvexHull::<3>::build(&pts, hull::HullOptions::default()) {
        Err(hull::HullError::Numerical { .. }) => hull::ConvexHull::<3>::build(
            &pts,
            hull::HullOptions {
                joggle: 1e-10,
                ..Default::default()
            },
        ),
        other => other,
    }
    .map_err(|e| GeometryError::Reconstruction {
        reason: e.to_string(),
        points: n,
    })?;
    // Compact the vertex set to the hull vertices only.
    let mut remap = vec![usize::MAX; n];
    let mut vertices = Vec::new();
    let mut faces = Vec::with_capacity(hull.facets().len());
    for facet in hull.facets() {
        let mut tri = [0usize; 3];
        for (k, &v) in facet.vertices.iter().enumerate() {
            if remap[v] == usize::MAX {
                remap[v] = vertices.len();
                vertices.push(cloud.points()[v]);
            }
            tri[k] = remap[v];
        }
        // Orient counter-clockwise as seen from outside.
        let (a, b, c) = (vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
        let n = Vector3::from(facet.normal);
        if (b - a).cross(&(c - a)).dot(&n) < 0.0 {
            tri.swap(1, 2);
        }
        faces.push(tri);
    }
    let mesh = TriMesh::new(vertices, faces)?;
    if mesh.is_empty() {
        return Err(GeometryError::Reconstruction {
            reason: "hull has no non-degenerate faces".into(),
            points: n,
        });
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn cube_corners(half: f64) -> PointCloud {
        let mut pts = Vec::new();
        for &x in &[-half, half] {
            for &y in &[-half, half] {
                for &z in &[-half, half] {
                    pts.push(Point3::new(x, y, z));
                }
            }
        }
        PointCloud::new("object", pts).unwrap()
    }

    fn assert_watertight(mesh: &TriMesh) {
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for f in mesh.faces() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        assert!(edges.values().all(|&c| c == 2), "open or non-manifold edge");
        assert!(mesh.signed_volume() > 0.0);
    }

    #[test]
    fn cube_corners_reconstruct_to_twelve_triangles() {
        let mesh = reconstruct_mesh(&cube_corners(1.0)).unwrap();
        assert_eq!(mesh.faces().len(), 12);
        assert!((mesh.signed_volume() - 8.0).abs() < 1e-9);
        assert_watertight(&mesh);
    }

    #[test]
    fn sphere_cloud_hull_volume_is_bounded_by_the_ball() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<Point3> = (0..1000)
            .map(|_| loop {
                let v = Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    break Point3::from(v / n);
                }
            })
            .collect();
        let mesh = reconstruct_mesh(&PointCloud::new("object", pts).unwrap()).unwrap();
        let ball = 4.0 / 3.0 * std::f64::consts::PI;
        let v = mesh.signed_volume();
        assert!(v >= 0.9 * ball && v <= ball, "volume {v}");
        assert_watertight(&mesh);
    }

    #[test]
    fn too_few_or_coplanar_points_fail() {
        let three = PointCloud::new(
            "object",
            vec![
                Point3::origin(),
                Point3::new(1.0, 0.0, 0.0),
                Point3::new(0.0, 1.0, 0.0),
            ],
        )
        .unwrap();
        assert!(matches!(
            reconstruct_mesh(&three),
            Err(GeometryError::Reconstruction { points: 3, .. })
        ));
        let flat: Vec<Point3> = (0..20)
            .map(|i| Point3::new((i % 5) as f64, (i / 5) as f64, 0.0))
            .collect();
        assert!(reconstruct_mesh(&PointCloud::new("object", flat).unwrap()).is_err());
    }
}
