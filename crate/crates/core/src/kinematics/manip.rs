// SPDX-License-Identifier: Apache-2.0

//! Velocity-manipulability measures.

use nalgebra::{DMatrix, DVector, Matrix6xX};

use super::{JointConfig, KinematicChain, KinematicsError};

/// The Jacobian block used for manipulability: the full 6×N Jacobian for
/// chains with at least six joints, the linear 3×N block otherwise.
pub fn task_block(jac: &Matrix6xX<f64>) -> DMatrix<f64> {
    let rows = if jac.ncols() >= 6 { 6 } else { 3 };
    DMatrix::from_fn(rows, jac.ncols(), |r, c| jac[(r, c)])
}

/// Yoshikawa manipulability `sqrt(det(J Jᵀ))` of the task block. When the
/// block has more rows than joints the smaller Gram matrix `Jᵀ J` is used,
/// which for a planar arm gives the area of its 2-D velocity ellipse.
pub fn manipulability(chain: &KinematicChain, q: &JointConfig) -> Result<f64, KinematicsError> {
    Ok(manipulability_at(chain, &chain.values(q)?))
}

pub fn manipulability_at(chain: &KinematicChain, values: &[f64]) -> f64 {
    let block = task_block(&chain.jacobian_at(values));
    let gram = if block.nrows() <= block.ncols() {
        &block * block.transpose()
    } else {
        block.transpose() * &block
    };
    gram.determinant().max(0.0).sqrt()
}

/// Radius along unit direction `u` of the ellipsoid `{J q̇ : |q̇| ≤ 1}`,
/// i.e. `1 / sqrt(uᵀ (J Jᵀ)⁺ u)`.
///
/// Zero when the ellipsoid is collapsed along `u`: `u` leaves the column
/// space of `J`, or has a component along a vanishing singular direction.
pub fn ellipsoid_radius(jac: &DMatrix<f64>, u: &DVector<f64>) -> f64 {
    let svd = jac.clone().svd(true, false);
    let basis = svd.u.as_ref().expect("requested U");
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return 0.0;
    }
    let coeffs = basis.transpose() * u;
    let residual = u - basis * &coeffs;
    if residual.norm() > 1e-9 {
        return 0.0;
    }
    let mut quad = 0.0;
    for (c, s) in coeffs.iter().zip(svd.singular_values.iter()) {
        if *s <= 1e-9 * smax {
            if c.abs() > 1e-9 {
                return 0.0;
            }
            continue;
        }
        quad += (c / s).powi(2);
    }
    if quad == 0.0 {
        0.0
    } else {
        1.0 / quad.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::chain::tests::planar_2link;
    use std::f64::consts::FRAC_PI_2;

    fn q2(a: f64, b: f64) -> JointConfig {
        JointConfig::from_pairs([("j1", a), ("j2", b)])
    }

    #[test]
    fn stretched_planar_arm_is_singular() {
        assert!(manipulability(&planar_2link(), &q2(0.0, 0.0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn elbow_right_angle_has_unit_manipulability() {
        // |det J| = l1·l2·|sin q2| = 1
        let m = manipulability(&planar_2link(), &q2(0.0, FRAC_PI_2)).unwrap();
        assert!((m - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ellipsoid_radius_matches_closed_form() {
        // At q = (0, 90°) the planar Jacobian is [[-1, -1], [1, 0]];
        // (J Jᵀ)⁻¹ = [[1, 1], [1, 2]] so the radius along x is 1.
        let j = DMatrix::from_row_slice(2, 2, &[-1.0, -1.0, 1.0, 0.0]);
        let inv = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.0]);
        for u in [DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.6, 0.8])] {
            let quad: f64 = (u.transpose() * &inv * &u)[0];
            let expected = 1.0 / quad.sqrt();
            assert!((ellipsoid_radius(&j, &u) - expected).abs() < 1e-12);
        }
        // Through the chain: planar block from the 3×2 linear Jacobian.
        let block = task_block(&planar_2link().jacobian(&q2(0.0, FRAC_PI_2)).unwrap());
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!((ellipsoid_radius(&block, &x) - 1.0).abs() < 1e-12);
        // Out-of-plane direction is unreachable.
        let z = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert_eq!(ellipsoid_radius(&block, &z), 0.0);
    }

    #[test]
    fn collapsed_direction_scores_zero() {
        let block = task_block(&planar_2link().jacobian(&q2(0.0, 0.0)).unwrap());
        // Stretched along x: no velocity along x is possible.
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(ellipsoid_radius(&block, &x), 0.0);
        let y = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!(ellipsoid_radius(&block, &y) > 0.0);
    }

    proptest::proptest! {
        #[test]
        fn manipulability_is_non_negative(a in -3.0..3.0f64, b in -3.0..3.0f64) {
            proptest::prop_assert!(manipulability(&planar_2link(), &q2(a, b)).unwrap() >= 0.0);
        }
    }
}
