// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::{Point3, TriMesh, Vector3};

/// Axis-aligned box centered at the origin with full edge lengths `size`.
pub fn box_mesh(size: Vector3) -> TriMesh {
    let h = size / 2.0;
    let mut vertices = Vec::with_capacity(8);
    for i in 0..8 {
        let sx = if i & 1 == 0 { -h.x } else { h.x };
        let sy = if i & 2 == 0 { -h.y } else { h.y };
        let sz = if i & 4 == 0 { -h.z } else { h.z };
        vertices.push(Point3::new(sx, sy, sz));
    }
    let faces = vec![
        [0, 2, 1], [1, 2, 3], // -z
        [4, 5, 6], [5, 7, 6], // +z
        [0, 1, 4], [1, 5, 4], // -y
        [2, 6, 3], [3, 6, 7], // +y
        [0, 4, 2], [2, 4, 6], // -x
        [1, 3, 5], [3, 7, 5], // +x
    ];
    TriMesh::new(vertices, faces).expect("box is valid")
}

/// Subdivided icosahedron projected onto a sphere of `radius`.
pub fn icosphere(radius: f64, subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vector3>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = verts.into_iter().map(|v| Point3::from(v * radius)).collect();
    TriMesh::new(vertices, faces).expect("icosphere is valid")
}

/// Surface of revolution about +z. `profile` lists `(radius, z)` pairs from
/// bottom to top; open ends are closed with flat caps.
pub fn revolve_profile(profile: &[(f64, f64)], segments: usize) -> TriMesh {
    assert!(segments >= 3 && profile.len() >= 2);
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(profile.len() + 2);
    if profile[0].0 > 0.0 {
        pts.push((0.0, profile[0].1));
    }
    pts.extend_from_slice(profile);
    let last = profile[profile.len() - 1];
    if last.0 > 0.0 {
        pts.push((0.0, last.1));
    }

    let mut vertices = Vec::new();
    // Per profile point: either a single pole vertex or a ring of `segments`.
    let mut rings: Vec<Vec<usize>> = Vec::with_capacity(pts.len());
    for &(r, z) in &pts {
        if r <= 0.0 {
            vertices.push(Point3::new(0.0, 0.0, z));
            rings.push(vec![vertices.len() - 1; segments]);
        } else {
            let start = vertices.len();
            for j in 0..segments {
                let th = 2.0 * std::f64::consts::PI * j as f64 / segments as f64;
                vertices.push(Point3::new(r * th.cos(), r * th.sin(), z));
            }
            rings.push((start..start + segments).collect());
        }
    }
    let mut faces = Vec::new();
    for i in 0..pts.len() - 1 {
        for j in 0..segments {
            let jn = (j + 1) % segments;
            let (a, b) = (rings[i][j], rings[i][jn]);
            let (c, d) = (rings[i + 1][jn], rings[i + 1][j]);
            if a != b {
                faces.push([a, b, c]);
            }
            if c != d {
                faces.push([a, c, d]);
            }
        }
    }
    TriMesh::new(vertices, faces).expect("revolved profile is valid")
}

/// Closed cylinder about +z, centered at the origin.
pub fn cylinder_mesh(radius: f64, height: f64, segments: usize) -> TriMesh {
    revolve_profile(&[(radius, -height / 2.0), (radius, height / 2.0)], segments)
}
