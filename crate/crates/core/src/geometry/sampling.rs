// SPDX-License-Identifier: Apache-2.0

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GeometryError, Point3, TriMesh, Vector3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub point: Point3,
    /// Unit outward normal of the sampled face.
    pub normal: Vector3,
    pub face_index: usize,
}

/// Draws `n` points uniformly by area over the surface. Deterministic in `seed`.
pub fn sample_surface(mesh: &TriMesh, n: usize, seed: u64) -> Result<Vec<SurfaceSample>, GeometryError> {
    if mesh.is_empty() {
        return Err(GeometryError::InvalidGeometry("cannot sample an empty mesh".into()));
    }
    let mut cdf = Vec::with_capacity(mesh.areas().len());
    let mut acc = 0.0;
    for a in mesh.areas() {
        acc += a;
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| {
            let r = rng.gen::<f64>() * total;
            let face = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
            let [a, b, c] = mesh.triangle(face);
            let s = rng.gen::<f64>().sqrt();
            let t = rng.gen::<f64>();
            let point = Point3::from(a.coords * (1.0 - s) + b.coords * (s * (1.0 - t)) + c.coords * (s * t));
            SurfaceSample {
                point,
                normal: mesh.normals()[face],
                face_index: face,
            }
        })
        .collect();
    Ok(samples)
}
