// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TriMesh;

/// Quantization step (m) applied to vertex coordinates before hashing.
pub const DIGEST_QUANTUM: f64 = 1e-6;

/// SHA-256 of a mesh's canonicalized geometry.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct MeshDigest([u8; 32]);

impl MeshDigest {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = hex::decode(s).ok()?;
        Some(Self(bytes.try_into().ok()?))
    }
}

impl fmt::Display for MeshDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for MeshDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MeshDigest({})", &self.to_hex()[..12])
    }
}

impl From<MeshDigest> for String {
    fn from(d: MeshDigest) -> String {
        d.to_hex()
    }
}

impl TryFrom<String> for MeshDigest {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        MeshDigest::from_hex(&s).ok_or_else(|| format!("invalid digest {s:?}"))
    }
}

type QVertex = [i64; 3];

fn quantize(p: &nalgebra::Point3<f64>) -> QVertex {
    [
        (p.x / DIGEST_QUANTUM).round() as i64,
        (p.y / DIGEST_QUANTUM).round() as i64,
        (p.z / DIGEST_QUANTUM).round() as i64,
    ]
}

/// Content hash that ignores vertex and face ordering.
///
/// Each face becomes a triple of quantized vertex coordinates, rotated so the
/// lexicographically smallest vertex leads (winding is kept); the face list is
/// then sorted and hashed.
pub fn mesh_digest(mesh: &TriMesh) -> MeshDigest {
    let q: Vec<QVertex> = mesh.vertices().iter().map(quantize).collect();
    let mut faces: Vec<[QVertex; 3]> = mesh
        .faces()
        .iter()
        .map(|f| {
            let tri = [q[f[0]], q[f[1]], q[f[2]]];
            let lead = (0..3).min_by_key(|&k| tri[k]).unwrap();
            [tri[lead], tri[(lead + 1) % 3], tri[(lead + 2) % 3]]
        })
        .collect();
    faces.sort_unstable();
    let mut h = Sha256::new();
    h.update((faces.len() as u64).to_le_bytes());
    for face in &faces {
        for v in face {
            for c in v {
                h.update(c.to_le_bytes());
            }
        }
    }
    MeshDigest(h.finalize().into())
}
