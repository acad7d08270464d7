// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{GeometryError, Point3, Vector3};
use crate::pose::{Pose, PoseDoc};

/// Points in a named frame. Coordinates are always finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CloudDoc", into = "CloudDoc")]
pub struct PointCloud {
    frame: String,
    points: Vec<Point3>,
}

#[derive(Serialize, Deserialize)]
struct CloudDoc {
    #[serde(default = "default_frame")]
    frame: String,
    points: Vec<[f64; 3]>,
}

fn default_frame() -> String {
    "world".into()
}

impl TryFrom<CloudDoc> for PointCloud {
    type Error = GeometryError;
    fn try_from(doc: CloudDoc) -> Result<Self, Self::Error> {
        PointCloud::new(doc.frame, doc.points.into_iter().map(Point3::from).collect())
    }
}

impl From<PointCloud> for CloudDoc {
    fn from(c: PointCloud) -> Self {
        CloudDoc {
            frame: c.frame,
            points: c.points.iter().map(|p| [p.x, p.y, p.z]).collect(),
        }
    }
}

impl PointCloud {
    pub fn new(frame: impl Into<String>, points: Vec<Point3>) -> Result<Self, GeometryError> {
        if let Some(index) = points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite { index });
        }
        Ok(Self {
            frame: frame.into(),
            points,
        })
    }

    /// Parses the ASCII cloud format: one `x y z` triple per line, `#` comments.
    pub fn parse_text(frame: impl Into<String>, text: &str) -> Result<Self, GeometryError> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            match vals {
                Ok(v) if v.len() == 3 => points.push(Point3::new(v[0], v[1], v[2])),
                Ok(v) => {
                    return Err(GeometryError::Parse {
                        line: i + 1,
                        message: format!("expected 3 numbers, found {}", v.len()),
                    })
                }
                Err(e) => {
                    return Err(GeometryError::Parse {
                        line: i + 1,
                        message: e.to_string(),
                    })
                }
            }
        }
        Self::new(frame, points)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 32);
        for p in &self.points {
            out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
        }
        out
    }

    pub fn frame(&self) -> &str {
        &self.frame
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Oriented region-of-interest box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoiDoc", into = "RoiDoc")]
pub struct RoiBox {
    center: Pose,
    half_extents: Vector3,
}

#[derive(Serialize, Deserialize)]
struct RoiDoc {
    center: PoseDoc,
    half_extents: [f64; 3],
}

impl TryFrom<RoiDoc> for RoiBox {
    type Error = GeometryError;
    fn try_from(doc: RoiDoc) -> Result<Self, Self::Error> {
        let center = doc.center.to_pose().map_err(GeometryError::InvalidGeometry)?;
        RoiBox::new(center, Vector3::from(doc.half_extents))
    }
}

impl From<RoiBox> for RoiDoc {
    fn from(b: RoiBox) -> Self {
        RoiDoc {
            center: PoseDoc::from(&b.center),
            half_extents: b.half_extents.into(),
        }
    }
}

impl RoiBox {
    pub fn new(center: Pose, half_extents: Vector3) -> Result<Self, GeometryError> {
        if !half_extents.iter().all(|h| h.is_finite() && *h > 0.0) {
            return Err(GeometryError::InvalidGeometry(format!(
                "ROI half-extents must be positive, got {:?}",
                half_extents.as_slice()
            )));
        }
        Ok(Self { center, half_extents })
    }

    pub fn axis_aligned(center: Point3, half_extents: Vector3) -> Result<Self, GeometryError> {
        Self::new(Pose::translation(center.x, center.y, center.z), half_extents)
    }

    pub fn center(&self) -> &Pose {
        &self.center
    }

    pub fn half_extents(&self) -> &Vector3 {
        &self.half_extents
    }

    pub fn contains(&self, p: &Point3) -> bool {
        let local = self.center.inverse_transform_point(p);
        (0..3).all(|i| local[i].abs() <= self.half_extents[i])
    }
}

/// Keeps the points inside `roi`, preserving order.
pub fn crop_cloud(cloud: &PointCloud, roi: &RoiBox) -> PointCloud {
    PointCloud {
        frame: cloud.frame.clone(),
        points: cloud.points.iter().copied().filter(|p| roi.contains(p)).collect(),
    }
}
