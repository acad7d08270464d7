// SPDX-License-Identifier: Apache-2.0

//! Serial-chain kinematics and the hand model.

pub(crate) mod chain;
mod hand;
mod ik;
mod manip;
mod robot;

pub use chain::{Joint, JointConfig, JointType, KinematicChain};
pub use hand::{close_fingers, Capsule, Contact, EndEffectorModel, Finger, FingerClosure, CONTACT_EPSILON};
pub use ik::{solve_ik, solve_ik_toleranced, IkOptions, ReachStatus, TolerancedSolution, TOLERANCE_RANDOM_SAMPLES};
pub use manip::{ellipsoid_radius, manipulability, manipulability_at, task_block};
pub use robot::{RobotModel, ROBOT_SCHEMA_HINT};

pub use crate::pose::Pose;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum KinematicsError {
    #[error("joint configuration is missing a value for {0:?}")]
    IncompleteConfig(String),
    #[error("hand penetrates the object at its open configuration ({0})")]
    Penetration(String),
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
    #[error("invalid robot description: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}
