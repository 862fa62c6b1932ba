//! Product-of-exponentials inverse dynamics, `τ = M(θ)·θ̈ + h(θ, θ̇)`.
//!
//! Works purely from space-frame screws `S_i` and home poses `M_i`: body
//! screws are `A_i = Ad_{M_i⁻¹}·S_i` and neighbouring frames are related by
//! `T_{i,i-1}(θ) = e^{−[A_i]θ_i}·M_{i,i-1}`.

use nalgebra::{DMatrix, DVector};

use crate::kinematics::{JointState, KinematicsError};
use crate::model::{spatial_inertia, RobotModel};
use crate::spatial::{
    ad_transpose_apply, adjoint_apply, adjoint_transpose_apply, bracket, exp_se3_unchecked, Mat6,
    RigidTransform, Twist, Vec3,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PoeDynamics {
    pub torque: DVector<f64>,
    /// Symmetric positive-definite `M(θ)`.
    pub mass_matrix: DMatrix<f64>,
    /// `h(θ, θ̇)`: Coriolis, centripetal, gravity and friction terms.
    pub bias: DVector<f64>,
}

/// Configuration-independent data for the recursion.
#[derive(Debug, Clone)]
pub struct PoeChain {
    /// `A_i`
    pub body_screws: Vec<Twist>,
    /// `M_{i,i-1} = M_i⁻¹·M_{i-1}` with `M_0 = I`.
    home_to_parent: Vec<RigidTransform>,
    inertias: Vec<Mat6>,
}

impl PoeChain {
    pub fn new(model: &RobotModel) -> Result<Self, KinematicsError> {
        let mut prev = RigidTransform::identity();
        let mut body_screws = Vec::with_capacity(model.dof());
        let mut home_to_parent = Vec::with_capacity(model.dof());
        for (i, j) in model.joints.iter().enumerate() {
            let home = j
                .home_pose_space
                .ok_or(KinematicsError::MissingHomePose { joint: i + 1 })?;
            let home_inv = home.inverse();
            body_screws.push(adjoint_apply(&home_inv, &j.space_screw));
            home_to_parent.push(home_inv * prev);
            prev = home;
        }
        let inertias = model.links.iter().map(spatial_inertia).collect();
        Ok(Self {
            body_screws,
            home_to_parent,
            inertias,
        })
    }

    pub fn dof(&self) -> usize {
        self.body_screws.len()
    }

    /// Newton-Euler with space-frame gravity `g` along −z.
    pub fn rnea(&self, theta: &[f64], theta_d: &[f64], theta_dd: &[f64], gravity: f64) -> DVector<f64> {
        let n = self.dof();
        let mut to_parent = Vec::with_capacity(n);
        let mut twists = Vec::with_capacity(n);
        let mut accels = Vec::with_capacity(n);
        let mut v = Twist::zero();
        let mut vd = Twist::new(Vec3::zeros(), Vec3::new(0.0, 0.0, gravity));
        for i in 0..n {
            let a = self.body_screws[i];
            // T_{i,i-1}
            let t = exp_se3_unchecked(&a, -theta[i]) * self.home_to_parent[i];
            v = adjoint_apply(&t, &v) + a * theta_d[i];
            vd = adjoint_apply(&t, &vd) + bracket(&v, &(a * theta_d[i])) + a * theta_dd[i];
            to_parent.push(t);
            twists.push(v);
            accels.push(vd);
        }
        let mut tau = DVector::zeros(n);
        let mut f = Twist::zero();
        for i in (0..n).rev() {
            let g = &self.inertias[i];
            let momentum = Twist::from_vector(&(g * twists[i].to_vector()));
            let own = Twist::from_vector(&(g * accels[i].to_vector())) - ad_transpose_apply(&twists[i], &momentum);
            f = if i + 1 < n {
                own + adjoint_transpose_apply(&to_parent[i + 1], &f)
            } else {
                own
            };
            tau[i] = f.to_vector().dot(&self.body_screws[i].to_vector());
        }
        tau
    }

    /// Columns `M·e_j` from unit-acceleration probes with gravity and rates off.
    pub fn mass_matrix(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.dof();
        let zeros = vec![0.0; n];
        let mut m = DMatrix::zeros(n, n);
        let mut unit = vec![0.0; n];
        for j in 0..n {
            unit[j] = 1.0;
            m.set_column(j, &self.rnea(theta, &zeros, &unit, 0.0));
            unit[j] = 0.0;
        }
        m
    }
}

/// Returns `(τ, M, h)` with `τ = M·θ̈ + h`. `h` is the recursion evaluated at
/// `θ̈ = 0`, plus the model's friction term.
pub fn inverse_dynamics_poe(model: &RobotModel, state: &JointState) -> Result<PoeDynamics, KinematicsError> {
    let chain = PoeChain::new(model)?;
    Ok(evaluate(&chain, model, state))
}

pub(crate) fn evaluate(chain: &PoeChain, model: &RobotModel, state: &JointState) -> PoeDynamics {
    let n = model.dof();
    let theta = state.q.as_slice();
    let mass_matrix = chain.mass_matrix(theta);
    let bias = chain.rnea(theta, state.qd.as_slice(), &vec![0.0; n], model.gravity) + model.friction.torque(&state.qd);
    let torque = &mass_matrix * &state.qdd + &bias;
    PoeDynamics {
        torque,
        mass_matrix,
        bias,
    }
}
