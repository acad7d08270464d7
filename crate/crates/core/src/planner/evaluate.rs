// SPDX-License-Identifier: Apache-2.0

//! Built-in evaluators: the combined grasp/arm score and the capability index.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::epsilon::{force_closure_epsilon, ContactPoint, ContactSet};
use super::registry::{parse_params, GraspEvaluator};
use super::{GraspCandidate, PlanContext, PlannerError};
use crate::kinematics::{ellipsoid_radius, manipulability_at, KinematicChain};
use crate::pose::Pose;
use crate::taskmodel::tcp_world_pose;

pub const COMBINED: &str = "combined";
pub const CAPABILITY_INDEX: &str = "capability_index";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CombinedParams {
    /// Weight of the normalized force-closure quality.
    pub w_grasp: f64,
    /// Weight of the normalized mean manipulability.
    pub w_kinematic: f64,
    pub mu: f64,
    pub cone_edges: usize,
}

impl Default for CombinedParams {
    fn default() -> Self {
        CombinedParams {
            w_grasp: 0.5,
            w_kinematic: 0.5,
            mu: 0.5,
            cone_edges: 8,
        }
    }
}

pub struct Combined {
    pub params: CombinedParams,
}

impl Combined {
    pub fn new(params: CombinedParams) -> Result<Self, PlannerError> {
        let p = &params;
        let ok = p.w_grasp >= 0.0 && p.w_kinematic >= 0.0 && (p.w_grasp + p.w_kinematic - 1.0).abs() < 1e-9;
        if !ok || !(p.mu >= 0.0 && p.mu.is_finite()) || p.cone_edges < 3 {
            return Err(PlannerError::InvalidParams {
                plugin: COMBINED.into(),
                message: "weights must be non-negative and sum to 1, mu >= 0, cone_edges >= 3".into(),
            });
        }
        Ok(Combined { params })
    }

    pub fn from_params(v: &Value) -> Result<Self, PlannerError> {
        Self::new(parse_params(COMBINED, v)?)
    }

    /// Force-closure quality of the grasp's recorded contacts.
    pub fn epsilon(&self, candidate: &GraspCandidate, ctx: &PlanContext<'_>) -> f64 {
        let set = ContactSet {
            contacts: candidate
                .grasp
                .contacts
                .iter()
                .map(|c| ContactPoint {
                    point: c.point,
                    normal: -c.normal,
                    mu: self.params.mu,
                })
                .collect(),
            center_of_mass: ctx.task.object.mesh().centroid(),
        };
        force_closure_epsilon(&set, self.params.cone_edges)
    }
}

/// Mean manipulability over the candidate's per-step arm configurations.
pub fn mean_manipulability(chain: &KinematicChain, candidate: &GraspCandidate) -> Result<f64, PlannerError> {
    let n = candidate.per_step_config.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for q in &candidate.per_step_config {
        sum += manipulability_at(chain, &chain.values(q)?);
    }
    Ok(sum / n as f64)
}

/// `w_g·ε/max ε + w_k·m/max m` over the batch; a zero batch maximum
/// contributes zero.
pub fn combine_scores(raw: &[(f64, f64)], w_grasp: f64, w_kinematic: f64) -> Vec<f64> {
    let max_e = raw.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_m = raw.iter().map(|r| r.1).fold(0.0, f64::max);
    let norm = |v: f64, max: f64| if max > 0.0 { v / max } else { 0.0 };
    raw.iter().map(|&(e, m)| w_grasp * norm(e, max_e) + w_kinematic * norm(m, max_m)).collect()
}

impl GraspEvaluator for Combined {
    fn name(&self) -> &str {
        COMBINED
    }

    fn evaluate(&self, candidates: &[GraspCandidate], ctx: &PlanContext<'_>) -> Result<Vec<f64>, PlannerError> {
        let raw: Vec<(f64, f64)> = candidates
            .par_iter()
            .map(|c| Ok((self.epsilon(c, ctx), mean_manipulability(&ctx.chain, c)?)))
            .collect::<Result<_, PlannerError>>()?;
        Ok(combine_scores(&raw, self.params.w_grasp, self.params.w_kinematic))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapabilityParams {
    /// Converts rotation (rad) to a length when mixing it with translation (m).
    pub characteristic_length: f64,
}

impl Default for CapabilityParams {
    fn default() -> Self {
        CapabilityParams {
            characteristic_length: 0.2,
        }
    }
}

pub struct CapabilityIndex {
    pub params: CapabilityParams,
}

impl CapabilityIndex {
    pub fn new(params: CapabilityParams) -> Result<Self, PlannerError> {
        if !(params.characteristic_length > 0.0 && params.characteristic_length.is_finite()) {
            return Err(PlannerError::InvalidParams {
                plugin: CAPABILITY_INDEX.into(),
                message: "characteristic_length must be positive".into(),
            });
        }
        Ok(CapabilityIndex { params })
    }

    pub fn from_params(v: &Value) -> Result<Self, PlannerError> {
        Self::new(parse_params(CAPABILITY_INDEX, v)?)
    }
}

/// Velocity-ellipsoid radius of the arm at `q` along the twist carrying the
/// TCP from `from` to `to`. Rotation is weighted by `length`; arms with
/// fewer than six joints are scored on translation only. Zero when the
/// poses coincide.
pub fn capability_term(chain: &KinematicChain, q: &[f64], from: &Pose, to: &Pose, length: f64) -> f64 {
    let dp = to.translation.vector - from.translation.vector;
    let dr = (to.rotation * from.rotation.inverse()).scaled_axis();
    let jac = chain.jacobian_at(q);
    let (u, j) = if chain.dof() >= 6 {
        let u = DVector::from_iterator(6, dp.iter().copied().chain((dr * length).iter().copied()));
        let mut j = DMatrix::from_fn(6, jac.ncols(), |r, c| jac[(r, c)]);
        j.rows_mut(3, 3).scale_mut(length);
        (u, j)
    } else {
        let u = DVector::from_column_slice(dp.as_slice());
        (u, DMatrix::from_fn(3, jac.ncols(), |r, c| jac[(r, c)]))
    };
    let norm = u.norm();
    if norm == 0.0 {
        return 0.0;
    }
    ellipsoid_radius(&j, &(u / norm))
}

impl CapabilityIndex {
    pub fn score(&self, candidate: &GraspCandidate, ctx: &PlanContext<'_>) -> Result<f64, PlannerError> {
        let chain = &ctx.chain;
        let steps = &ctx.task.steps;
        let q0 = chain.values(&candidate.per_step_config[0])?;
        if steps.len() == 1 {
            return Ok(manipulability_at(chain, &q0));
        }
        let mut total = 0.0;
        for k in 0..steps.len() - 1 {
            let from = tcp_world_pose(&steps[k].pose, &candidate.grasp);
            let to = tcp_world_pose(&steps[k + 1].pose, &candidate.grasp);
            let q = chain.values(&candidate.per_step_config[k])?;
            total += capability_term(chain, &q, &from, &to, self.params.characteristic_length);
        }
        Ok(total)
    }
}

impl GraspEvaluator for CapabilityIndex {
    fn name(&self) -> &str {
        CAPABILITY_INDEX
    }

    fn evaluate(&self, candidates: &[GraspCandidate], ctx: &PlanContext<'_>) -> Result<Vec<f64>, PlannerError> {
        candidates.par_iter().map(|c| self.score(c, ctx)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::chain::tests::planar_2link;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn single_candidate_normalizes_to_one() {
        assert_eq!(combine_scores(&[(0.3, 2.0)], 0.5, 0.5), vec![1.0]);
        assert_eq!(combine_scores(&[(0.0, 2.0)], 0.5, 0.5), vec![0.5]);
    }

    #[test]
    fn higher_epsilon_scores_higher_at_equal_manipulability() {
        let s = combine_scores(&[(0.2, 1.0), (0.1, 1.0), (0.0, 1.0)], 0.5, 0.5);
        assert!(s[0] > s[1] && s[1] > s[2]);
        assert!((s[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn planar_capability_term_matches_closed_form() {
        // J = [[-1, -1], [1, 0]] at q = (0, 90°); (J Jᵀ)⁻¹ = [[1, 1], [1, 2]];
        // along x the radius is 1/sqrt(1) = 1.
        let arm = planar_2link();
        let from = Pose::translation(1.0, 1.0, 0.0);
        let to = Pose::translation(1.5, 1.0, 0.0);
        let r = capability_term(&arm, &[0.0, FRAC_PI_2], &from, &to, 0.2);
        assert!((r - 1.0).abs() < 1e-12, "{r}");
        // Along y: uᵀ(JJᵀ)⁻¹u = 2.
        let to_y = Pose::translation(1.0, 1.5, 0.0);
        let ry = capability_term(&arm, &[0.0, FRAC_PI_2], &from, &to_y, 0.2);
        assert!((ry - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singular_direction_scores_zero() {
        // Stretched along x: no instantaneous motion along x.
        let arm = planar_2link();
        let from = Pose::translation(2.0, 0.0, 0.0);
        let to = Pose::translation(1.9, 0.0, 0.0);
        assert_eq!(capability_term(&arm, &[0.0, 0.0], &from, &to, 0.2), 0.0);
    }

    #[test]
    fn better_conditioned_config_scores_higher() {
        let arm = planar_2link();
        let from = Pose::translation(1.0, 1.0, 0.0);
        let to = Pose::translation(1.5, 1.0, 0.0);
        let bent = capability_term(&arm, &[0.0, FRAC_PI_2], &from, &to, 0.2);
        let nearly_straight = capability_term(&arm, &[0.0, 0.2], &from, &to, 0.2);
        let straighter = capability_term(&arm, &[0.0, 0.1], &from, &to, 0.2);
        assert!(bent > 0.0 && nearly_straight > 0.0);
        assert!(nearly_straight > straighter);
    }
}
