// SPDX-License-Identifier: Apache-2.0

//! Damped-least-squares inverse kinematics with seeded random restarts.

use nalgebra::{DVector, Matrix3, Matrix6, Translation3, UnitQuaternion, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{JointConfig, KinematicChain, KinematicsError};
use crate::pose::Pose;

/// Random samples drawn from a non-empty tolerance box after the nominal
/// target and the box corners have failed.
pub const TOLERANCE_RANDOM_SAMPLES: usize = 16;

/// An attempt is abandoned after this many iterations without a 1 % drop in
/// the normalized pose error.
const STALL_ITERATIONS: usize = 25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IkOptions {
    pub damping: f64,
    pub max_iterations: usize,
    pub max_restarts: usize,
    /// Position tolerance (m).
    pub pos_tol: f64,
    /// Geodesic rotation tolerance (rad). An infinite value solves for
    /// position only.
    pub rot_tol: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        Self {
            damping: 0.1,
            max_iterations: 200,
            max_restarts: 10,
            pos_tol: 1e-3,
            rot_tol: 1e-2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachStatus {
    Exact,
    ToleranceOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TolerancedSolution {
    pub config: JointConfig,
    pub status: ReachStatus,
    /// The TCP target that was actually reached.
    pub target: Pose,
}

/// Solves for a configuration whose tip reaches `target`, starting at `seed`
/// and then at up to `max_restarts` uniform random configurations.
///
/// Returns `Ok(None)` when the budget is exhausted.
pub fn solve_ik(
    chain: &KinematicChain,
    target: &Pose,
    seed: &JointConfig,
    opts: &IkOptions,
    rng_seed: u64,
) -> Result<Option<JointConfig>, KinematicsError> {
    let seed = chain.values(seed)?;
    Ok(solve_values(chain, target, &seed, opts, rng_seed).map(|v| chain.config(&v)))
}

pub(crate) fn solve_values(
    chain: &KinematicChain,
    target: &Pose,
    seed: &[f64],
    opts: &IkOptions,
    rng_seed: u64,
) -> Option<Vec<f64>> {
    let start: Vec<f64> = chain.joints().iter().zip(seed).map(|(j, &v)| j.clamp(v)).collect();
    if let Some(q) = attempt(chain, target, start, opts) {
        return Some(q);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..opts.max_restarts).find_map(|_| attempt(chain, target, chain.random_values(&mut rng), opts))
}

fn attempt(chain: &KinematicChain, target: &Pose, mut q: Vec<f64>, opts: &IkOptions) -> Option<Vec<f64>> {
    let position_only = !opts.rot_tol.is_finite();
    let lambda2 = opts.damping * opts.damping;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for it in 0..=opts.max_iterations {
        let pose = chain.fk(&q);
        let ep = target.translation.vector - pose.translation.vector;
        let eo = (target.rotation * pose.rotation.inverse()).scaled_axis();
        let (pe, re) = (ep.norm(), eo.norm());
        if pe <= opts.pos_tol && (position_only || re <= opts.rot_tol) {
            return Some(q);
        }
        if it == opts.max_iterations {
            break;
        }
        let merit = pe / opts.pos_tol + if position_only { 0.0 } else { re / opts.rot_tol };
        if merit < 0.99 * best {
            best = merit;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_ITERATIONS {
                break;
            }
        }
        let ep = if pe > 0.1 { ep * (0.1 / pe) } else { ep };
        let eo = if re > 0.5 { eo * (0.5 / re) } else { eo };
        let jac = chain.jacobian_at(&q);
        let dq: DVector<f64> = if position_only {
            let jv = jac.fixed_rows::<3>(0);
            let gram = jv * jv.transpose() + Matrix3::identity() * lambda2;
            let y = gram.cholesky()?.solve(&ep);
            jv.transpose() * y
        } else {
            let e = Vector6::new(ep.x, ep.y, ep.z, eo.x, eo.y, eo.z);
            let gram: Matrix6<f64> = &jac * jac.transpose() + Matrix6::identity() * lambda2;
            let y = gram.cholesky()?.solve(&e);
            jac.transpose() * y
        };
        for ((v, d), j) in q.iter_mut().zip(dq.iter()).zip(chain.joints()) {
            *v = j.clamp(*v + d);
        }
    }
    None
}

fn check_tolerance(name: &str, v: &Vector3<f64>) -> Result<(), KinematicsError> {
    if v.iter().all(|x| x.is_finite() && *x >= 0.0) {
        Ok(())
    } else {
        Err(KinematicsError::InvalidTolerance(format!("{name} must be non-negative, got {:?}", v.as_slice())))
    }
}

/// Object-frame perturbation: translation `d`, then intrinsic X-Y-Z rotation.
fn offset_pose(d: &Vector3<f64>, angles: &Vector3<f64>) -> Pose {
    let rot = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), angles.x)
        * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), angles.y)
        * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angles.z);
    Pose::from_parts(Translation3::from(*d), rot)
}

/// Reaches `step_pose ∘ grasp_offset`, or failing that a target whose object
/// pose lies inside the step's tolerance box.
///
/// Candidates are tried in order: the nominal target, the corners of the
/// position box at nominal rotation, then [`TOLERANCE_RANDOM_SAMPLES`]
/// seeded samples uniform over position box × rotation box. Rotation
/// tolerances are half-ranges of intrinsic X-Y-Z Euler offsets about the
/// object's axes.
#[allow(clippy::too_many_arguments)]
pub fn solve_ik_toleranced(
    chain: &KinematicChain,
    step_pose: &Pose,
    tol_pos: &Vector3<f64>,
    tol_rot: &Vector3<f64>,
    grasp_offset: &Pose,
    seed: &JointConfig,
    opts: &IkOptions,
    rng_seed: u64,
) -> Result<Option<TolerancedSolution>, KinematicsError> {
    check_tolerance("tol_pos", tol_pos)?;
    check_tolerance("tol_rot", tol_rot)?;
    let seed = chain.values(seed)?;
    let solve = |offset: &Pose, k: u64, status| {
        let target = step_pose * offset * grasp_offset;
        let sub_seed = rng_seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        solve_values(chain, &target, &seed, opts, sub_seed).map(|v| TolerancedSolution {
            config: chain.config(&v),
            status,
            target,
        })
    };
    if let Some(s) = solve(&Pose::identity(), 0, ReachStatus::Exact) {
        return Ok(Some(s));
    }
    if tol_pos.iter().all(|&t| t == 0.0) && tol_rot.iter().all(|&t| t == 0.0) {
        return Ok(None);
    }
    let mut corners: Vec<Vector3<f64>> = Vec::with_capacity(8);
    for i in 0..8 {
        let sign = |b: usize| if i & b == 0 { -1.0 } else { 1.0 };
        let c = Vector3::new(sign(1) * tol_pos.x, sign(2) * tol_pos.y, sign(4) * tol_pos.z);
        if c != Vector3::zeros() && !corners.contains(&c) {
            corners.push(c);
        }
    }
    let mut k = 1;
    for c in &corners {
        if let Some(s) = solve(&offset_pose(c, &Vector3::zeros()), k, ReachStatus::ToleranceOnly) {
            return Ok(Some(s));
        }
        k += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed.wrapping_add(0x5851_F42D_4C95_7F2D));
    let mut uniform = |half: f64| if half > 0.0 { rng.gen_range(-half..=half) } else { 0.0 };
    for _ in 0..TOLERANCE_RANDOM_SAMPLES {
        let d = Vector3::new(uniform(tol_pos.x), uniform(tol_pos.y), uniform(tol_pos.z));
        let a = Vector3::new(uniform(tol_rot.x), uniform(tol_rot.y), uniform(tol_rot.z));
        if let Some(s) = solve(&offset_pose(&d, &a), k, ReachStatus::ToleranceOnly) {
            return Ok(Some(s));
        }
        k += 1;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::chain::tests::planar_2link;
    use crate::pose::pose_error;

    fn planar_target(x: f64, y: f64) -> Pose {
        // Analytic elbow-down 2R solution gives the reachable orientation.
        let c2 = (x * x + y * y - 2.0) / 2.0;
        let q2 = c2.clamp(-1.0, 1.0).acos();
        let q1 = y.atan2(x) - q2.sin().atan2(1.0 + q2.cos());
        Pose::from_parts(
            Translation3::new(x, y, 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q1 + q2),
        )
    }

    fn zero() -> JointConfig {
        JointConfig::from_pairs([("j1", 0.0), ("j2", 0.0)])
    }

    #[test]
    fn seed_at_target_is_returned() {
        let arm = planar_2link();
        let seed = JointConfig::from_pairs([("j1", 0.3), ("j2", -0.7)]);
        let target = arm.forward_kinematics(&seed).unwrap();
        let q = solve_ik(&arm, &target, &seed, &IkOptions::default(), 1).unwrap().unwrap();
        assert_eq!(q, seed);
    }

    #[test]
    fn reachable_planar_target() {
        let arm = planar_2link();
        let target = planar_target(0.5, 0.5);
        let opts = IkOptions::default();
        let q = solve_ik(&arm, &target, &zero(), &opts, 7).unwrap().expect("reachable");
        let (dp, dr) = pose_error(&arm.forward_kinematics(&q).unwrap(), &target);
        assert!(dp < opts.pos_tol && dr < opts.rot_tol);
        assert!(arm.within_limits(&arm.values(&q).unwrap()));
    }

    #[test]
    fn outside_workspace_fails() {
        let arm = planar_2link();
        let target = Pose::translation(3.0, 0.0, 0.0);
        assert!(solve_ik(&arm, &target, &zero(), &IkOptions::default(), 7).unwrap().is_none());
    }

    #[test]
    fn deterministic_for_fixed_seeds() {
        let arm = planar_2link();
        let target = planar_target(-0.4, 1.2);
        let a = solve_ik(&arm, &target, &zero(), &IkOptions::default(), 3).unwrap();
        let b = solve_ik(&arm, &target, &zero(), &IkOptions::default(), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn toleranced_statuses() {
        let arm = planar_2link();
        let opts = IkOptions::default();
        let zero_tol = Vector3::zeros();
        let reach = planar_target(1.2, 0.4);
        let s = solve_ik_toleranced(&arm, &reach, &zero_tol, &zero_tol, &Pose::identity(), &zero(), &opts, 1)
            .unwrap()
            .unwrap();
        assert_eq!(s.status, ReachStatus::Exact);

        // 1 cm past full stretch along x; the planar arm cannot leave z = 0,
        // so the box is flat in z.
        let beyond = Pose::translation(2.01, 0.0, 0.0);
        assert!(
            solve_ik_toleranced(&arm, &beyond, &zero_tol, &zero_tol, &Pose::identity(), &zero(), &opts, 1)
                .unwrap()
                .is_none()
        );
        let tol = Vector3::new(0.02, 0.02, 0.0);
        let position_only = IkOptions {
            rot_tol: f64::INFINITY,
            ..opts
        };
        let s = solve_ik_toleranced(&arm, &beyond, &tol, &zero_tol, &Pose::identity(), &zero(), &position_only, 1)
            .unwrap()
            .expect("reachable within tolerance");
        assert_eq!(s.status, ReachStatus::ToleranceOnly);
        let fk = arm.forward_kinematics(&s.config).unwrap();
        assert!(pose_error(&fk, &s.target).0 < opts.pos_tol);
        assert!((s.target.translation.vector - beyond.translation.vector).abs().max() <= 0.02 + 1e-12);
    }

    #[test]
    fn negative_tolerance_is_rejected() {
        let arm = planar_2link();
        let err = solve_ik_toleranced(
            &arm,
            &Pose::identity(),
            &Vector3::new(-0.1, 0.0, 0.0),
            &Vector3::zeros(),
            &Pose::identity(),
            &zero(),
            &IkOptions::default(),
            0,
        );
        assert!(matches!(err, Err(KinematicsError::InvalidTolerance(_))));
    }

    #[test]
    fn six_dof_round_trip() {
        use rand::SeedableRng;
        let arm = crate::fixtures::reference_arm();
        let opts = IkOptions::default();
        let seed = arm.config(&crate::fixtures::neutral_arm_values());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut ok = 0;
        for k in 0..100 {
            let target = arm.fk(&arm.random_values(&mut rng));
            if let Some(q) = solve_ik(&arm, &target, &seed, &opts, k).unwrap() {
                let (p, r) = pose_error(&arm.forward_kinematics(&q).unwrap(), &target);
                assert!(p <= opts.pos_tol && r <= opts.rot_tol);
                assert!(arm.within_limits(&arm.values(&q).unwrap()));
                ok += 1;
            }
        }
        assert!(ok >= 95, "{ok}/100 solved");
    }
}

