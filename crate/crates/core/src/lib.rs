// SPDX-License-Identifier: Apache-2.0

//! Task-constrained grasp planning.

pub mod fixtures;
pub mod geometry;
pub mod kinematics;
pub mod planner;
pub mod pose;
pub mod service;
pub mod taskmodel;

pub use pose::{Pose, PoseDoc};

/// Deserializes a JSON document, prefixing errors with the offending field path.
pub fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            e.inner().to_string()
        } else {
            format!("{path}: {}", e.inner())
        }
    })?;
    de.end().map_err(|e| e.to_string())?;
    Ok(value)
}
