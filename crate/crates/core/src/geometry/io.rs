// SPDX-License-Identifier: Apache-2.0

//! Wavefront OBJ and binary STL mesh files.

use std::collections::HashMap;
use std::path::Path;

use super::{GeometryError, Point3, TriMesh};

/// Loads a mesh by file extension (`.obj` or `.stl`).
pub fn load_mesh(path: &Path) -> Result<TriMesh, GeometryError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "obj" => parse_obj(&std::fs::read_to_string(path)?),
        "stl" => parse_stl_binary(&std::fs::read(path)?),
        other => Err(GeometryError::InvalidGeometry(format!(
            "unsupported mesh format {other:?} for {}",
            path.display()
        ))),
    }
}

/// Parses `v` and `f` records; polygons are fan-triangulated. Supports
/// `v/vt/vn` index forms and negative (relative) indices.
pub fn parse_obj(text: &str) -> Result<TriMesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        let err = |message: String| GeometryError::Parse { line: i + 1, message };
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>().map_err(|e| err(e.to_string())))
                    .collect::<Result<_, _>>()?;
                if c.len() != 3 {
                    return Err(err("vertex needs 3 coordinates".into()));
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        let k: i64 = first.parse().map_err(|_| err(format!("bad face index {tok:?}")))?;
                        let n = vertices.len() as i64;
                        let resolved = if k > 0 { k - 1 } else { n + k };
                        if k == 0 || resolved < 0 || resolved >= n {
                            return Err(err(format!("face index {k} out of range")));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() < 3 {
                    return Err(err("face needs at least 3 vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

/// Parses a binary STL, merging bit-identical vertices.
pub fn parse_stl_binary(bytes: &[u8]) -> Result<TriMesh, GeometryError> {
    let bad = |m: &str| GeometryError::Parse {
        line: 0,
        message: m.to_string(),
    };
    if bytes.len() < 84 {
        return Err(bad("STL shorter than header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() < 84 + count * 50 {
        return Err(bad("STL truncated"));
    }
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::with_capacity(count);
    for t in 0..count {
        let base = 84 + t * 50 + 12;
        let mut tri = [0usize; 3];
        for (k, slot) in tri.iter_mut().enumerate() {
            let o = base + k * 12;
            let p = Point3::new(f32_at(o), f32_at(o + 4), f32_at(o + 8));
            let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
            *slot = *index.entry(key).or_insert_with(|| {
                vertices.push(p);
                vertices.len() - 1
            });
        }
        faces.push(tri);
    }
    TriMesh::new(vertices, faces)
}

pub fn write_stl_binary(mesh: &TriMesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend((mesh.faces().len() as u32).to_le_bytes());
    for (f, n) in mesh.faces().iter().zip(mesh.normals()) {
        for c in n.iter() {
            out.extend((*c as f32).to_le_bytes());
        }
        for &v in f {
            for c in mesh.vertices()[v].coords.iter() {
                out.extend((*c as f32).to_le_bytes());
            }
        }
        out.extend([0u8; 2]);
    }
    out
}
