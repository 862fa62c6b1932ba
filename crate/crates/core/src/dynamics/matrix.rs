//! Closed-form Lie-group dynamics over stacked 6n-dimensional operators.
//!
//! `M = SᵀGᵀJGS`, `C = SᵀGᵀ(J·G·ad_{Sq̇}·Γ − ad*_V·J)·G·S`,
//! `φ = SᵀGᵀJGP₀V̇₀`. This is the readable reference path; it materializes
//! every operator and costs O(n³).

use nalgebra::{DMatrix, DVector};

use super::DynamicsDecomposition;
use crate::kinematics::{link_frames_dh, JointState};
use crate::model::{spatial_inertia, RobotModel};
use crate::spatial::{ad_dual, ad_small, adjoint, Mat6, Twist, Vec6};

#[derive(Debug, Clone, PartialEq)]
pub struct StackedOperators {
    /// 6n×n block diagonal of body screws `s_i`.
    pub s: DMatrix<f64>,
    /// 6n×6n block diagonal of spatial inertias `J_i`.
    pub j: DMatrix<f64>,
    /// 6n×6n with `Ad_{f_{i-1,i}⁻¹}` on the block subdiagonal.
    pub gamma: DMatrix<f64>,
    /// `(I − Γ)⁻¹ = I + Γ + ⋯ + Γⁿ⁻¹`.
    pub g: DMatrix<f64>,
    /// 6n×6 base injection `[Ad_{f_{0,1}⁻¹}; 0; …; 0]`.
    pub p0: DMatrix<f64>,
}

fn set_block(m: &mut DMatrix<f64>, bi: usize, bj: usize, block: &Mat6) {
    m.view_mut((6 * bi, 6 * bj), (6, 6)).copy_from(block);
}

#[allow(clippy::needless_range_loop)] // block index arithmetic
pub fn build_operators(model: &RobotModel, q: &[f64]) -> StackedOperators {
    let n = model.dof();
    let frames = link_frames_dh(model, q);
    let ad_inv: Vec<Mat6> = frames.relative.iter().map(|f| adjoint(&f.inverse())).collect();

    let mut s = DMatrix::zeros(6 * n, n);
    let mut j = DMatrix::zeros(6 * n, 6 * n);
    let mut gamma = DMatrix::zeros(6 * n, 6 * n);
    for i in 0..n {
        s.view_mut((6 * i, i), (6, 1))
            .copy_from(&model.joints[i].body_screw.to_vector());
        set_block(&mut j, i, i, &spatial_inertia(&model.links[i]));
        if i > 0 {
            set_block(&mut gamma, i, i - 1, &ad_inv[i]);
        }
    }

    // Γ is nilpotent, so block forward substitution gives G exactly:
    // G_ii = I, G_ij = Γ_{i,i-1}·G_{i-1,j}.
    let mut g = DMatrix::zeros(6 * n, 6 * n);
    let mut blocks: Vec<Vec<Mat6>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row: Vec<Mat6> = match blocks.last() {
            Some(prev) => prev.iter().map(|b| ad_inv[i] * b).collect(),
            None => Vec::with_capacity(1),
        };
        row.push(Mat6::identity());
        for (jj, b) in row.iter().enumerate() {
            set_block(&mut g, i, jj, b);
        }
        blocks.push(row);
    }

    let mut p0 = DMatrix::zeros(6 * n, 6);
    p0.view_mut((0, 0), (6, 6)).copy_from(&ad_inv[0]);

    StackedOperators { s, j, gamma, g, p0 }
}

impl StackedOperators {
    pub fn dof(&self) -> usize {
        self.s.ncols()
    }

    fn gs(&self) -> DMatrix<f64> {
        &self.g * &self.s
    }

    pub fn mass_matrix(&self) -> DMatrix<f64> {
        let gs = self.gs();
        gs.transpose() * (&self.j * &gs)
    }

    /// Stacked body twists `V = G·S·q̇`.
    pub fn twists(&self, qd: &DVector<f64>) -> DVector<f64> {
        &self.g * (&self.s * qd)
    }

    pub fn coriolis_matrix(&self, qd: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dof();
        let gs = self.gs();
        let v = &gs * qd;
        let mut ad_sqd = DMatrix::zeros(6 * n, 6 * n);
        let mut ad_v = DMatrix::zeros(6 * n, 6 * n);
        for i in 0..n {
            let sq: Vec6 = self.s.fixed_view::<6, 1>(6 * i, i) * qd[i];
            set_block(&mut ad_sqd, i, i, &ad_small(&Twist::from_vector(&sq)));
            let vi = v.fixed_rows::<6>(6 * i).into_owned();
            set_block(&mut ad_v, i, i, &ad_dual(&Twist::from_vector(&vi)));
        }
        // Right-associated products keep every step at 6n×6n·6n×n.
        let velocity_product = &self.j * (&self.g * (&ad_sqd * (&self.gamma * &gs)));
        let gyroscopic = &ad_v * (&self.j * &gs);
        gs.transpose() * (velocity_product - gyroscopic)
    }

    pub fn gravity_vector(&self, base_acceleration: &Twist) -> DVector<f64> {
        let gs = self.gs();
        let a = &self.g * (&self.p0 * base_acceleration.to_vector());
        gs.transpose() * (&self.j * a)
    }
}

pub fn mass_matrix(model: &RobotModel, q: &[f64]) -> DMatrix<f64> {
    build_operators(model, q).mass_matrix()
}

pub fn coriolis_matrix(model: &RobotModel, q: &[f64], qd: &[f64]) -> DMatrix<f64> {
    build_operators(model, q).coriolis_matrix(&DVector::from_column_slice(qd))
}

pub fn gravity_vector(model: &RobotModel, q: &[f64]) -> DVector<f64> {
    build_operators(model, q).gravity_vector(&model.base_acceleration(model.gravity))
}

/// `τ = M(q)·q̈ + C(q, q̇)·q̇ + φ(q)` (plus the model's friction term).
pub fn inverse_dynamics_matrix(model: &RobotModel, state: &JointState) -> DynamicsDecomposition {
    let ops = build_operators(model, state.q.as_slice());
    let mass_matrix = ops.mass_matrix();
    let coriolis_matrix = ops.coriolis_matrix(&state.qd);
    let gravity_vector = ops.gravity_vector(&model.base_acceleration(model.gravity));
    let torque = &mass_matrix * &state.qdd + &coriolis_matrix * &state.qd + &gravity_vector
        + model.friction.torque(&state.qd);
    DynamicsDecomposition {
        mass_matrix,
        coriolis_matrix,
        gravity_vector,
        torque,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::inverse_dynamics_recursive;
    use crate::fixtures;
    use crate::spatial::Vec3;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_vec(rng: &mut impl Rng, n: usize, s: f64) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-s..s)).collect()
    }

    #[test]
    fn single_link_operators() {
        let p = fixtures::pendulum(1.0, 1.0, 0.0, 9.8);
        let ops = build_operators(&p, &[0.3]);
        assert_eq!(ops.gamma, DMatrix::zeros(6, 6));
        assert_eq!(ops.g, DMatrix::identity(6, 6));
    }

    #[test]
    fn g_inverts_identity_minus_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let m = fixtures::random_model(&mut rng, 3);
        let q = random_vec(&mut rng, 3, PI);
        let ops = build_operators(&m, &q);
        let eye = DMatrix::<f64>::identity(18, 18);
        let prod = &ops.g * (&eye - &ops.gamma);
        assert!((prod - &eye).abs().max() < 1e-13);
        let direct = (&eye - &ops.gamma).try_inverse().unwrap();
        assert!((direct - &ops.g).abs().max() < 1e-13);
        // Nilpotent: Γ³ = 0.
        let g3 = &ops.gamma * &ops.gamma * &ops.gamma;
        assert_eq!(g3.abs().max(), 0.0);
    }

    #[test]
    fn gamma_blocks_match_link_frames() {
        let m = fixtures::synthetic_7dof();
        let q = [0.2, -0.3, 0.5, 1.1, -0.7, 0.4, 0.9];
        let ops = build_operators(&m, &q);
        let frames = link_frames_dh(&m, &q);
        for i in 1..7 {
            let block = ops.gamma.view((6 * i, 6 * (i - 1)), (6, 6)).into_owned();
            assert_eq!(block, DMatrix::from_iterator(6, 6, adjoint(&frames.relative[i].inverse()).iter().cloned()));
        }
    }

    #[test]
    fn point_pendulum_mass_matrix() {
        // About +y through the origin, mass at (l, 0, 0).
        let (m, l) = (3.0, 0.7);
        let p = fixtures::pendulum_about(Vec3::y(), m, l, 0.0, 0.0);
        let mm = mass_matrix(&p, &[1.2]);
        assert_relative_eq!(mm[(0, 0)], m * l * l, epsilon = 1e-13);
    }

    #[test]
    fn pendulum_gravity_closed_form() {
        let (m, l, g) = (2.0, 0.5, 9.80665);
        let p = fixtures::pendulum(m, l, 0.1, g);
        for q in [-1.0, 0.0, 0.4, 2.0] {
            assert_relative_eq!(gravity_vector(&p, &[q])[0], m * g * l * f64::cos(q), epsilon = 1e-12);
        }
        assert!(gravity_vector(&p, &[-FRAC_PI_2])[0].abs() < 1e-14);
        assert_eq!(gravity_vector(&p.with_gravity(0.0), &[0.3])[0], 0.0);
    }

    #[test]
    fn coriolis_vanishes_at_rest_and_scales_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let m = fixtures::random_model(&mut rng, 7);
        let q = random_vec(&mut rng, 7, PI);
        assert_eq!(coriolis_matrix(&m, &q, &[0.0; 7]).abs().max(), 0.0);
        let qd = DVector::from_vec(random_vec(&mut rng, 7, 2.0));
        let a = 1.7;
        let lhs = coriolis_matrix(&m, &q, (&qd * a).as_slice()) * (&qd * a);
        let rhs = coriolis_matrix(&m, &q, qd.as_slice()) * &qd * (a * a);
        assert!((lhs - rhs).abs().max() < 1e-12);
    }

    #[test]
    fn coriolis_product_matches_recursive() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let m = fixtures::synthetic_7dof().with_gravity(0.0);
        for _ in 0..50 {
            let q = random_vec(&mut rng, 7, PI);
            let qd = random_vec(&mut rng, 7, 2.0);
            let c = coriolis_matrix(&m, &q, &qd) * DVector::from_column_slice(&qd);
            let rec = inverse_dynamics_recursive(&m, &JointState::from_slices(&q, &qd, &[0.0; 7]));
            assert!((c - rec).abs().max() < 1e-10);
        }
    }

    #[test]
    fn decomposition_matches_recursive() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for n in [1, 2, 5, 7] {
            let m = fixtures::random_model(&mut rng, n);
            let s = JointState::from_slices(
                &random_vec(&mut rng, n, PI),
                &random_vec(&mut rng, n, 2.0),
                &random_vec(&mut rng, n, 5.0),
            );
            let d = inverse_dynamics_matrix(&m, &s);
            let rec = inverse_dynamics_recursive(&m, &s);
            assert!((&d.torque - rec).abs().max() < 1e-10, "n = {n}");
            let mm = &d.mass_matrix;
            assert!((mm - mm.transpose()).abs().max() < 1e-10 * mm.abs().max());
            assert!(mm.clone().cholesky().is_some());
        }
    }

    #[test]
    fn zero_state_no_gravity() {
        let m = fixtures::synthetic_7dof().with_gravity(0.0);
        let d = inverse_dynamics_matrix(&m, &JointState::zeros(7));
        assert_eq!(d.torque.abs().max(), 0.0);
    }

    #[test]
    fn horizontal_pendulum_holding_torque() {
        let (m, l, g) = (1.2, 0.9, 9.80665);
        let p = fixtures::pendulum(m, l, 0.0, g);
        let d = inverse_dynamics_matrix(&p, &JointState::zeros(1));
        assert_relative_eq!(d.torque[0], m * g * l, epsilon = 1e-12);
    }
}
