use nalgebra::DVector;

use crate::kinematics::{forward_sweep, JointState};
use crate::model::{spatial_inertia, RobotModel};
use crate::spatial::{ad_transpose_apply, adjoint_transpose_apply, Twist};

/// Two-pass Newton-Euler in link coordinates with an explicit gravity value.
///
/// Forward pass propagates `V_i`, `V̇_i` from the base acceleration
/// `[0; 0, 0, g]`; the backward pass accumulates
/// `F_i = J_i·V̇_i − ad_{V_i}ᵀ·J_i·V_i + Ad_{f_{i,i+1}⁻¹}ᵀ·F_{i+1}` and projects
/// `τ_i = s_iᵀ·F_i`. Friction is not included.
pub fn rnea(model: &RobotModel, state: &JointState, gravity: f64) -> DVector<f64> {
    let motion = forward_sweep(model, state, model.base_acceleration(gravity));
    let n = model.dof();
    let mut tau = DVector::zeros(n);
    let mut child = Twist::zero();
    for i in (0..n).rev() {
        let j = spatial_inertia(&model.links[i]);
        let v = motion.twists[i];
        let momentum = Twist::from_vector(&(j * v.to_vector()));
        let own = Twist::from_vector(&(j * motion.accelerations[i].to_vector())) - ad_transpose_apply(&v, &momentum);
        let from_child = if i + 1 < n {
            adjoint_transpose_apply(&motion.relative[i + 1].inverse(), &child)
        } else {
            Twist::zero()
        };
        let f = own + from_child;
        tau[i] = model.joints[i].body_screw.to_vector().dot(&f.to_vector());
        child = f;
    }
    tau
}

/// O(n) recursive inverse dynamics, including the model's friction term.
pub fn inverse_dynamics_recursive(model: &RobotModel, state: &JointState) -> DVector<f64> {
    rnea(model, state, model.gravity) + model.friction.torque(&state.qd)
}
