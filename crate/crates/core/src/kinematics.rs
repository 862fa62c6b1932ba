//! Forward kinematics and velocity/acceleration propagation along the chain.

use nalgebra::DVector;
use thiserror::Error;

use crate::model::RobotModel;
use crate::spatial::{adjoint_apply, bracket, exp_se3_unchecked, RigidTransform, Twist};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KinematicsError {
    #[error("frame index {index} out of range 0..={dof}")]
    IndexOutOfRange { index: usize, dof: usize },
    #[error("joint {joint} has no home_pose_space")]
    MissingHomePose { joint: usize },
}

/// Joint positions (rad), rates (rad/s) and accelerations (rad/s²).
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

impl JointState {
    /// Panics if the three vectors differ in length.
    pub fn new(q: DVector<f64>, qd: DVector<f64>, qdd: DVector<f64>) -> Self {
        assert!(
            q.len() == qd.len() && q.len() == qdd.len(),
            "joint state vectors must share one length"
        );
        Self { q, qd, qdd }
    }

    pub fn from_slices(q: &[f64], qd: &[f64], qdd: &[f64]) -> Self {
        Self::new(
            DVector::from_column_slice(q),
            DVector::from_column_slice(qd),
            DVector::from_column_slice(qdd),
        )
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(DVector::zeros(n), DVector::zeros(n), DVector::zeros(n))
    }

    /// At rest in configuration `q`.
    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        Self::new(q, DVector::zeros(n), DVector::zeros(n))
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn with_qdd(&self, qdd: DVector<f64>) -> Self {
        Self::new(self.q.clone(), self.qd.clone(), qdd)
    }
}

fn check_len(model: &RobotModel, len: usize) {
    assert_eq!(
        len,
        model.dof(),
        "vector length {len} does not match the model's {} joints",
        model.dof()
    );
}

/// Product-of-exponentials pose of link frame `frame_index` (1-based; 0 is
/// the base): `e^{[S₁]q₁}⋯e^{[S_k]q_k}·M_sk`.
pub fn fk_poe(model: &RobotModel, q: &[f64], frame_index: usize) -> Result<RigidTransform, KinematicsError> {
    check_len(model, q.len());
    let n = model.dof();
    if frame_index > n {
        return Err(KinematicsError::IndexOutOfRange { index: frame_index, dof: n });
    }
    if frame_index == 0 {
        return Ok(model.base_pose);
    }
    let home = model.joints[frame_index - 1]
        .home_pose_space
        .ok_or(KinematicsError::MissingHomePose { joint: frame_index })?;
    let mut t = RigidTransform::identity();
    for (j, &qi) in model.joints.iter().zip(q).take(frame_index) {
        t = t * exp_se3_unchecked(&j.space_screw, qi);
    }
    Ok(t * home)
}

/// Relative link transforms `f_{i-1,i}(q_i)` and absolute link poses in the
/// space frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkFrames {
    pub relative: Vec<RigidTransform>,
    pub absolute: Vec<RigidTransform>,
}

/// `f_{i-1,i}(q_i) = f_{i-1,i}(0)·e^{[s_i]q_i}`.
#[inline]
pub fn relative_transform(model: &RobotModel, joint: usize, qi: f64) -> RigidTransform {
    let j = &model.joints[joint];
    j.parent_to_child_home * exp_se3_unchecked(&j.body_screw, qi)
}

pub fn link_frames_dh(model: &RobotModel, q: &[f64]) -> LinkFrames {
    check_len(model, q.len());
    let relative: Vec<_> = (0..model.dof()).map(|i| relative_transform(model, i, q[i])).collect();
    let mut acc = model.base_pose;
    let absolute = relative
        .iter()
        .map(|f| {
            acc = acc * *f;
            acc
        })
        .collect();
    LinkFrames { relative, absolute }
}

/// Body twists `V_i = Ad_{f_{i-1,i}⁻¹}·V_{i-1} + s_i·q̇_i` with `V₀ = 0`.
pub fn body_twists(model: &RobotModel, q: &[f64], qd: &[f64]) -> Vec<Twist> {
    check_len(model, q.len());
    check_len(model, qd.len());
    let mut v = Twist::zero();
    (0..model.dof())
        .map(|i| {
            let inv = relative_transform(model, i, q[i]).inverse();
            v = adjoint_apply(&inv, &v) + model.joints[i].body_screw * qd[i];
            v
        })
        .collect()
}

/// Per-link quantities from one forward sweep.
#[derive(Debug, Clone)]
pub struct ChainMotion {
    /// `f_{i-1,i}(q_i)`
    pub relative: Vec<RigidTransform>,
    pub twists: Vec<Twist>,
    pub accelerations: Vec<Twist>,
}

/// Forward sweep of the recursive formulation. `base_acceleration` is the
/// spatial acceleration of frame 0 (gravity is injected through it).
///
/// `V̇_i = Ad_{f⁻¹}·V̇_{i-1} + s_i·q̈_i + [Ad_{f⁻¹}·V_{i-1}, s_i·q̇_i]`
pub fn forward_sweep(model: &RobotModel, state: &JointState, base_acceleration: Twist) -> ChainMotion {
    check_len(model, state.dof());
    let n = model.dof();
    let mut relative = Vec::with_capacity(n);
    let mut twists = Vec::with_capacity(n);
    let mut accelerations = Vec::with_capacity(n);
    let mut v = Twist::zero();
    let mut vd = base_acceleration;
    for i in 0..n {
        let f = relative_transform(model, i, state.q[i]);
        let inv = f.inverse();
        let s = model.joints[i].body_screw;
        let carried = adjoint_apply(&inv, &v);
        let joint_rate = s * state.qd[i];
        v = carried + joint_rate;
        vd = adjoint_apply(&inv, &vd) + s * state.qdd[i] + bracket(&carried, &joint_rate);
        relative.push(f);
        twists.push(v);
        accelerations.push(vd);
    }
    ChainMotion {
        relative,
        twists,
        accelerations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::spatial::Vec3;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_q(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-PI..PI)).collect()
    }

    #[test]
    fn fk_at_zero_is_home() {
        let m = fixtures::sawyer_kinematics();
        for k in 1..=7 {
            let t = fk_poe(&m, &[0.0; 7], k).unwrap();
            assert_eq!(t, m.joints[k - 1].home_pose_space.unwrap());
        }
        assert_eq!(fk_poe(&m, &[0.0; 7], 0).unwrap(), m.base_pose);
        assert_eq!(
            fk_poe(&m, &[0.0; 7], 8),
            Err(KinematicsError::IndexOutOfRange { index: 8, dof: 7 })
        );
    }

    #[test]
    fn fk_rest_pose_reaches_furthest_x() {
        let m = fixtures::sawyer_kinematics();
        let reach = m
            .joints
            .iter()
            .map(|j| j.home_pose_space.unwrap().translation.x)
            .fold(f64::MIN, f64::max);
        let ee = fk_poe(&m, &[0.0; 7], 7).unwrap();
        assert_eq!(ee.translation.x, reach);
        assert_eq!(reach, 1.0);
    }

    #[test]
    fn base_rotation_negates_xy() {
        let m = fixtures::sawyer_kinematics();
        let mut q = [0.0; 7];
        q[0] = PI;
        for k in 1..=7 {
            let home = fk_poe(&m, &[0.0; 7], k).unwrap().translation;
            let turned = fk_poe(&m, &q, k).unwrap().translation;
            assert_relative_eq!(turned, Vec3::new(-home.x, -home.y, home.z), epsilon = 1e-15);
        }
    }

    #[test]
    fn missing_home_pose() {
        let mut m = fixtures::pendulum(1.0, 1.0, 0.0, 0.0);
        m.joints[0].home_pose_space = None;
        assert_eq!(
            fk_poe(&m, &[0.3], 1),
            Err(KinematicsError::MissingHomePose { joint: 1 })
        );
    }

    #[test]
    fn dh_relative_at_zero_is_home() {
        let m = fixtures::synthetic_7dof();
        let frames = link_frames_dh(&m, &[0.0; 7]);
        for (f, j) in frames.relative.iter().zip(&m.joints) {
            assert_eq!(*f, j.parent_to_child_home);
        }
    }

    #[test]
    fn single_joint_quarter_turn() {
        let m = fixtures::pendulum_about(Vec3::z(), 1.0, 1.0, 0.0, 0.0);
        let frames = link_frames_dh(&m, &[FRAC_PI_2]);
        assert_relative_eq!(frames.absolute[0].rotation * Vec3::x(), Vec3::y(), epsilon = 1e-15);
    }

    #[test]
    fn poe_and_dh_agree_on_shipped_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for m in [fixtures::sawyer_kinematics(), fixtures::synthetic_7dof()] {
            for _ in 0..1000 {
                let q = random_q(&mut rng, 7);
                let dh = link_frames_dh(&m, &q);
                for k in 1..=7 {
                    let poe = fk_poe(&m, &q, k).unwrap();
                    assert_relative_eq!(poe.to_matrix(), dh.absolute[k - 1].to_matrix(), epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn poe_and_dh_agree_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..50 {
            let m = fixtures::random_model(&mut rng, 6);
            let q = random_q(&mut rng, 6);
            let dh = link_frames_dh(&m, &q);
            let poe = fk_poe(&m, &q, 6).unwrap();
            assert_relative_eq!(poe.to_matrix(), dh.absolute[5].to_matrix(), epsilon = 1e-10);
            let back = poe * poe.inverse();
            assert_relative_eq!(back.to_matrix(), RigidTransform::identity().to_matrix(), epsilon = 1e-11);
        }
    }

    #[test]
    fn twists_basic_cases() {
        let m = fixtures::synthetic_7dof();
        let q = [0.1, -0.4, 0.3, 1.0, -0.2, 0.5, 0.0];
        assert!(body_twists(&m, &q, &[0.0; 7]).iter().all(|v| *v == Twist::zero()));

        let p = fixtures::pendulum_about(Vec3::z(), 1.0, 1.0, 0.0, 0.0);
        let v = body_twists(&p, &[0.7], &[2.0]);
        assert_eq!(v[0], p.joints[0].body_screw * 2.0);
    }

    #[test]
    fn twists_are_linear_in_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let m = fixtures::random_model(&mut rng, 7);
        let q = random_q(&mut rng, 7);
        let a = random_q(&mut rng, 7);
        let b = random_q(&mut rng, 7);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 0.5 * y).collect();
        let va = body_twists(&m, &q, &a);
        let vb = body_twists(&m, &q, &b);
        let vs = body_twists(&m, &q, &sum);
        for i in 0..7 {
            let lin = va[i] * 2.0 - vb[i] * 0.5;
            assert_relative_eq!(vs[i].to_vector(), lin.to_vector(), epsilon = 1e-13);
        }
    }

    #[test]
    fn twist_matches_numerical_pose_derivative() {
        // Body twist is the vee of T⁻¹·Ṫ; check the angular part via rotation differences.
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let m = fixtures::random_model(&mut rng, 5);
        let q = random_q(&mut rng, 5);
        let qd = random_q(&mut rng, 5);
        let h = 1e-6;
        let plus: Vec<f64> = q.iter().zip(&qd).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = q.iter().zip(&qd).map(|(a, b)| a - h * b).collect();
        let tp = link_frames_dh(&m, &plus).absolute;
        let tm = link_frames_dh(&m, &minus).absolute;
        let t0 = link_frames_dh(&m, &q).absolute;
        let v = body_twists(&m, &q, &qd);
        for i in 0..5 {
            let rdot = (tp[i].rotation - tm[i].rotation) / (2.0 * h);
            let w = t0[i].rotation.transpose() * rdot;
            let omega = Vec3::new(w[(2, 1)], w[(0, 2)], w[(1, 0)]);
            assert_relative_eq!(omega, v[i].angular, epsilon = 1e-7);
            let pdot = (tp[i].translation - tm[i].translation) / (2.0 * h);
            assert_relative_eq!(t0[i].rotation.transpose() * pdot, v[i].linear, epsilon = 1e-7);
        }
    }
}
