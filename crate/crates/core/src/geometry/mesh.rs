// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::bvh::Bvh;
use super::{GeometryError, Point3, Vector3};

/// Faces with an area below this (m²) are dropped at construction.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Immutable triangle mesh with per-face outward normals.
///
/// Faces are wound counter-clockwise when seen from outside; normals follow
/// the right-hand rule over that winding.
#[derive(Clone)]
pub struct TriMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    normals: Vec<Vector3>,
    areas: Vec<f64>,
    bvh: Bvh,
}

impl TriMesh {
    /// Builds a mesh, validating indices and coordinates and dropping
    /// degenerate faces. An empty face list yields an empty mesh, which the
    /// surface queries reject.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if let Some(index) = vertices.iter().position(|v| !v.coords.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite { index });
        }
        let mut kept = Vec::with_capacity(faces.len());
        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        for (i, f) in faces.into_iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(GeometryError::InvalidGeometry(format!(
                    "face {i} references vertex out of range ({} vertices)",
                    vertices.len()
                )));
            }
            let cross = (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]]));
            let area = 0.5 * cross.norm();
            if area < DEGENERATE_AREA {
                continue;
            }
            kept.push(f);
            normals.push(cross / (2.0 * area));
            areas.push(area);
        }
        let bvh = Bvh::build(&vertices, &kept);
        Ok(Self {
            vertices,
            faces: kept,
            normals,
            areas,
            bvh,
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Unit outward normal of each face.
    pub fn normals(&self) -> &[Vector3] {
        &self.normals
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Point3; 3] {
        let f = self.faces[face];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    pub(crate) fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    pub fn surface_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Signed enclosed volume (positive for closed, outward-wound meshes).
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let (a, b, c) = (self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]);
                a.coords.dot(&b.coords.cross(&c.coords)) / 6.0
            })
            .sum()
    }

    /// Volume centroid for closed meshes; falls back to the area-weighted
    /// surface centroid when the enclosed volume vanishes.
    pub fn centroid(&self) -> Point3 {
        let mut vol = 0.0;
        let mut acc = Vector3::zeros();
        for f in &self.faces {
            let (a, b, c) = (self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]);
            let v = a.coords.dot(&b.coords.cross(&c.coords)) / 6.0;
            vol += v;
            acc += v * (a.coords + b.coords + c.coords) / 4.0;
        }
        if vol.abs() > 1e-15 {
            return Point3::from(acc / vol);
        }
        let total = self.surface_area();
        if total == 0.0 {
            return Point3::origin();
        }
        let mut acc = Vector3::zeros();
        for (f, &area) in self.faces.iter().zip(&self.areas) {
            let c = (self.vertices[f[0]].coords + self.vertices[f[1]].coords + self.vertices[f[2]].coords) / 3.0;
            acc += c * area;
        }
        Point3::from(acc / total)
    }

    /// Axis-aligned bounds `(min, max)`; `None` for an empty mesh.
    pub fn bounds(&self) -> Option<(Point3, Point3)> {
        if self.is_empty() {
            return None;
        }
        Some(self.bvh.root_bounds())
    }

    /// Rigidly transformed copy.
    pub fn transformed(&self, pose: &nalgebra::Isometry3<f64>) -> TriMesh {
        let vertices = self.vertices.iter().map(|v| pose * v).collect();
        TriMesh::new(vertices, self.faces.clone()).expect("rigid motion preserves validity")
    }
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.faces == other.faces
    }
}

impl std::fmt::Debug for TriMesh {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TriMesh")
            .field("vertices", &self.vertices.len())
            .field("faces", &self.faces.len())
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct MeshDoc {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
}

impl Serialize for TriMesh {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        MeshDoc {
            vertices: self.vertices.iter().map(|p| [p.x, p.y, p.z]).collect(),
            faces: self.faces.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TriMesh {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = MeshDoc::deserialize(d)?;
        TriMesh::new(
            doc.vertices.into_iter().map(Point3::from).collect(),
            doc.faces,
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_faces_are_dropped() {
        let v = vec![
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let mesh = TriMesh::new(v, vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(mesh.faces().len(), 1);
        assert!((mesh.normals()[0].norm() - 1.0).abs() < 1e-9);
        assert_eq!(mesh.normals()[0], Vector3::z());
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let v = vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)];
        assert!(matches!(
            TriMesh::new(v, vec![[0, 1, 3]]),
            Err(GeometryError::InvalidGeometry(_))
        ));
    }

    #[test]
    fn nan_vertex_is_rejected() {
        let v = vec![Point3::new(f64::NAN, 0.0, 0.0)];
        assert!(matches!(TriMesh::new(v, vec![]), Err(GeometryError::NonFinite { index: 0 })));
    }
}
