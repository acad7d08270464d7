// SPDX-License-Identifier: Apache-2.0

//! Reference robot, hand and task scenarios shared by tests, benches and the
//! CLI's shipped fixture files.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Translation3, Unit, UnitQuaternion, Vector3};

use crate::geometry::{cylinder_mesh, revolve_profile, sample_surface, Point3, PointCloud, RoiBox, TriMesh};
use crate::kinematics::{Capsule, EndEffectorModel, Finger, Joint, JointConfig, JointType, KinematicChain, RobotModel};
use crate::pose::{pose_xyz_rpy, Pose};
use crate::taskmodel::{GeometrySource, Grasp, ObjectInfo, TaskDescription, ToleranceStep};

pub const GRIPPER_NAME: &str = "parallel_gripper";

/// Free gap between the open fingers (m).
pub const GRIPPER_OPENING: f64 = 0.08;

fn joint(name: &str, kind: JointType, xyz: [f64; 3], axis: [f64; 3], limits: (f64, f64)) -> Joint {
    Joint {
        name: name.into(),
        kind,
        origin: pose_xyz_rpy(xyz, [0.0; 3]),
        axis: Unit::new_normalize(Vector3::from(axis)),
        limits,
    }
}

/// Six-joint anthropomorphic arm: base yaw, shoulder and elbow pitch, and a
/// spherical roll-pitch-roll wrist. Reach from the shoulder is 0.85 m.
pub fn reference_arm() -> KinematicChain {
    use JointType::Revolute as R;
    let joints = vec![
        joint("base_yaw", R, [0.0, 0.0, 0.3], [0.0, 0.0, 1.0], (-PI, PI)),
        joint("shoulder_pitch", R, [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], (-2.0, 2.0)),
        joint("elbow_pitch", R, [0.0, 0.0, 0.4], [0.0, 1.0, 0.0], (-2.6, 2.6)),
        joint("wrist_roll", R, [0.0, 0.0, 0.35], [0.0, 0.0, 1.0], (-PI, PI)),
        joint("wrist_pitch", R, [0.0, 0.0, 0.0], [0.0, 1.0, 0.0], (-2.1, 2.1)),
        joint("flange_roll", R, [0.0, 0.0, 0.1], [0.0, 0.0, 1.0], (-PI, PI)),
    ];
    KinematicChain::new("world", "flange", joints).expect("reference arm is valid")
}

/// Two prismatic fingers closing along the palm y-axis, 8 cm opening.
/// The TCP sits 4.5 cm out along the palm z-axis, which is the approach direction.
pub fn parallel_gripper() -> EndEffectorModel {
    parallel_gripper_with_opening(GRIPPER_OPENING)
}

/// [`parallel_gripper`] scaled uniformly to the given free opening (m).
pub fn parallel_gripper_with_opening(opening: f64) -> EndEffectorModel {
    let s = opening / GRIPPER_OPENING;
    let finger = |name: &str, side: f64| Finger {
        joints: vec![joint(name, JointType::Prismatic, [0.0, side * 0.045 * s, 0.0], [0.0, -side, 0.0], (0.0, 0.04 * s))],
        open: vec![0.0],
        closed: vec![0.04 * s],
        links: vec![Capsule::new([0.0, 0.0, 0.01 * s], [0.0, 0.0, 0.06 * s], 0.005 * s)],
    };
    EndEffectorModel {
        name: GRIPPER_NAME.into(),
        palm_frame: "palm".into(),
        tcp_offset: pose_xyz_rpy([0.0, 0.0, 0.045 * s], [0.0; 3]),
        palm: vec![Capsule::new([0.0, -0.05 * s, 0.0], [0.0, 0.05 * s, 0.0], 0.01 * s)],
        fingers: vec![finger("finger_left", -1.0), finger("finger_right", 1.0)],
    }
}

pub fn reference_robot() -> RobotModel {
    RobotModel::new("reference_arm", reference_arm(), vec![parallel_gripper()]).expect("reference robot is valid")
}

/// Arm configuration with the elbow bent and the flange pointing down.
pub fn neutral_arm_values() -> [f64; 6] {
    [0.0, 0.5, 1.6, 0.0, 1.04, 0.0]
}


pub fn start_config() -> JointConfig {
    reference_arm().config(&neutral_arm_values())
}

fn task(ee_group: &str, object: ObjectInfo, steps: Vec<ToleranceStep>) -> TaskDescription {
    TaskDescription {
        ee_group: ee_group.into(),
        object,
        steps,
        start_arm_config: start_config(),
    }
}

fn step(xyz: [f64; 3], rpy: [f64; 3], tol_pos: [f64; 3], tol_rot: [f64; 3]) -> ToleranceStep {
    ToleranceStep {
        pose: pose_xyz_rpy(xyz, rpy),
        tol_pos: Vector3::from(tol_pos),
        tol_rot: Vector3::from(tol_rot),
    }
}

fn primitive(source: GeometrySource, at: [f64; 3]) -> ObjectInfo {
    ObjectInfo::new(source, pose_xyz_rpy(at, [0.0; 3]), None).expect("fixture geometry is valid")
}

/// Paint roller handle, roller axis along the object x-axis. The object
/// traces a 20 cm square on the table and returns to its start; the roller
/// may swing about its axis but must stay on the line and on the table.
pub fn painting_task() -> TaskDescription {
    let corners = [[0.45, -0.1], [0.45, 0.1], [0.65, 0.1], [0.65, -0.1], [0.45, -0.1]];
    let steps = corners
        .iter()
        .map(|[x, y]| step([*x, *y, 0.06], [0.0; 3], [0.001, 0.001, 0.0], [0.3, 0.0, 0.0]))
        .collect();
    let handle = primitive(GeometrySource::Box { size: [0.03, 0.03, 0.12] }, [0.45, -0.1, 0.06]);
    task(GRIPPER_NAME, handle, steps)
}

/// Bottle picked from the table, raised beside a cup, then tipped a quarter
/// turn about its x-axis.
pub fn pour_task() -> TaskDescription {
    let raised = pose_xyz_rpy([0.45, 0.15, 0.4], [0.0; 3]);
    let tipped = raised * Pose::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&Vector3::x_axis(), FRAC_PI_2));
    let bottle = primitive(GeometrySource::Cylinder { radius: 0.035, height: 0.25 }, [0.5, -0.2, 0.125]);
    let steps = vec![
        step([0.5, -0.2, 0.125], [0.0; 3], [0.0; 3], [0.0; 3]),
        ToleranceStep::exact(raised),
        ToleranceStep::exact(tipped),
    ];
    task(GRIPPER_NAME, bottle, steps)
}

/// Stemmed glass: foot, thin stem and a closed bowl, about +z.
pub fn goblet_mesh() -> TriMesh {
    let profile = [
        (0.035, 0.0),
        (0.035, 0.005),
        (0.006, 0.012),
        (0.006, 0.09),
        (0.028, 0.11),
        (0.036, 0.15),
        (0.036, 0.2),
    ];
    revolve_profile(&profile, 32)
}

/// Glass carried from a cart to a customer, kept within 20° of upright
/// and free to spin about its own axis.
pub fn handover_task() -> TaskDescription {
    let tilt = 20f64.to_radians();
    let tol_rot = [tilt, tilt, PI];
    let glass = ObjectInfo::new(
        GeometrySource::Inline { mesh: goblet_mesh() },
        pose_xyz_rpy([0.5, -0.3, 0.0], [0.0; 3]),
        None,
    )
    .expect("goblet is valid");
    let steps = vec![
        step([0.5, -0.3, 0.0], [0.0; 3], [0.01; 3], tol_rot),
        step([0.5, 0.0, 0.25], [0.0; 3], [0.02; 3], tol_rot),
        step([0.3, 0.45, 0.3], [0.0; 3], [0.02; 3], tol_rot),
    ];
    task(GRIPPER_NAME, glass, steps)
}

/// Every step lies well beyond the arm's reach.
pub fn infeasible_task() -> TaskDescription {
    let cube = primitive(GeometrySource::Box { size: [0.04; 3] }, [2.0, 0.0, 0.3]);
    let steps = vec![
        step([2.0, 0.0, 0.3], [0.0; 3], [0.0; 3], [0.0; 3]),
        step([2.0, 0.5, 0.3], [0.0; 3], [0.0; 3], [0.0; 3]),
    ];
    task(GRIPPER_NAME, cube, steps)
}

/// Horizontal distance from the shoulder axis at which [`boundary_grasp`]
/// sits one centimetre beyond the reachable wrist-center sphere.
pub fn boundary_distance() -> f64 {
    0.4 + 0.35 + 0.01
}

/// One-step task on a 4 cm cube whose top-down grasp is 1 cm out of reach;
/// `tol` is the position half-width on every axis.
pub fn boundary_task(tol: f64) -> TaskDescription {
    // Wrist center at shoulder height: TCP 0.145 m below it.
    let at = [boundary_distance(), 0.0, 0.3 - 0.145 - 0.02];
    let cube = primitive(GeometrySource::Box { size: [0.04; 3] }, at);
    task(GRIPPER_NAME, cube, vec![step(at, [0.0; 3], [tol; 3], [0.0; 3])])
}

/// Top-down pinch of the boundary cube: TCP 2 cm above its center, approach
/// straight down, fingers on the ±y faces.
pub fn boundary_grasp() -> Grasp {
    let tcp = Pose::from_parts(
        Translation3::new(0.0, 0.0, 0.02),
        UnitQuaternion::from_axis_angle(&Vector3::x_axis(), PI),
    );
    let ee = parallel_gripper();
    let mut fingers = ee.open_config();
    for f in &ee.fingers {
        fingers.set(f.joints[0].name.clone(), 0.02);
    }
    Grasp::new(tcp, fingers, GRIPPER_NAME)
}

/// Synthetic table-top scene: a 7.5 cm-diameter, 23 cm-tall can standing on
/// a patch of table, sampled as a point cloud.
pub fn can_scene_cloud(seed: u64) -> PointCloud {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let can = cylinder_mesh(0.0375, 0.23, 48).transformed(&pose_xyz_rpy([0.5, 0.0, 0.115], [0.0; 3]));
    let mut points: Vec<Point3> = sample_surface(&can, 3000, seed)
        .expect("can mesh is non-empty")
        .into_iter()
        .map(|s| s.point)
        .collect();
    for _ in 0..2000 {
        points.push(Point3::new(rng.gen_range(0.2..0.8), rng.gen_range(-0.3..0.3), rng.gen_range(-0.004..-0.001)));
    }
    PointCloud::new("world", points).expect("finite points")
}

/// ROI box around the can in [`can_scene_cloud`], excluding the table.
pub fn can_roi() -> RoiBox {
    RoiBox::axis_aligned(Point3::new(0.5, 0.0, 0.12), Vector3::new(0.06, 0.06, 0.119)).expect("positive extents")
}

/// Pick-and-lift task for the object in [`can_scene_cloud`]. The geometry is
/// a placeholder box to be replaced from the cloud.
pub fn can_task() -> TaskDescription {
    let at = [0.5, 0.0, 0.115];
    let placeholder = primitive(GeometrySource::Box { size: [0.05, 0.05, 0.2] }, at);
    let steps = vec![
        step(at, [0.0; 3], [0.0; 3], [0.0; 3]),
        step([0.5, 0.0, 0.3], [0.0; 3], [0.0; 3], [0.0; 3]),
    ];
    task(GRIPPER_NAME, placeholder, steps)
}
