//! Rigid-body dynamics for open-chain serial manipulators.
//!
//! Two inverse-dynamics formulations share one model: a Lie-group recursive
//! Newton-Euler over relative link transforms (with its closed-form
//! `M`, `C`, `φ` matrix counterpart) and product of exponentials over
//! space-frame screw axes. A separate module computes the reaction torque at
//! a locked spherical air bearing carrying the arm, and [`oracle`] holds
//! independent numerical cross-checks for all of it.
//!
//! Twists and wrenches are ordered angular-first throughout.

pub mod batch;
pub mod dynamics;
pub mod fixtures;
pub mod kinematics;
pub mod model;
pub mod oracle;
pub mod platform;
pub mod spatial;
pub mod trajectory;

pub use batch::{Execution, Method};
pub use dynamics::{
    inverse_dynamics_matrix, inverse_dynamics_poe, inverse_dynamics_recursive, DynamicsDecomposition,
};
pub use kinematics::{fk_poe, JointState, KinematicsError};
pub use model::{parse_model, LinkParams, Model, ModelError, PlatformModel, RobotModel};
pub use spatial::{RigidTransform, Twist};
pub use trajectory::{Trajectory, TrajectorySample};
