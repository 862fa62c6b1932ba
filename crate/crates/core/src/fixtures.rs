//! Ready-made models: the shipped model files, a planar pendulum, and random
//! chains for property tests and benchmarks.

use rand::Rng;

use crate::model::{parse_model, JointDescription, LinkParams, Model, PlatformModel, RobotModel};
use crate::spatial::{exp_so3, Mat3, RigidTransform, Vec3};

pub const SAWYER_KINEMATICS_MODEL: &str = include_str!("../models/sawyer-kinematics.model");
pub const SYNTHETIC_7DOF_MODEL: &str = include_str!("../models/synthetic-7dof.model");

/// Sawyer screw geometry with placeholder mass properties.
pub fn sawyer_kinematics() -> RobotModel {
    match parse_model(SAWYER_KINEMATICS_MODEL).expect("shipped model parses") {
        Model::Arm(a) => a,
        Model::Platform(p) => p.arm,
    }
}

/// Seven-joint arm with made-up inertial parameters, mounted on a platform.
pub fn synthetic_platform() -> PlatformModel {
    match parse_model(SYNTHETIC_7DOF_MODEL).expect("shipped model parses") {
        Model::Platform(p) => p,
        Model::Arm(_) => unreachable!("synthetic model carries a platform block"),
    }
}

pub fn synthetic_7dof() -> RobotModel {
    synthetic_platform().arm
}

/// Single revolute joint about −ŷ through the origin with the link mass at
/// `(l, 0, 0)`. Positive `q` raises the mass, so `q` is the elevation above
/// the horizontal x axis and `q = −π/2` hangs straight down.
pub fn pendulum(mass: f64, length: f64, i_yy: f64, gravity: f64) -> RobotModel {
    pendulum_about(-Vec3::y(), mass, length, i_yy, gravity)
}

/// Same pendulum rotating about an arbitrary unit axis perpendicular to x.
pub fn pendulum_about(axis: Vec3, mass: f64, length: f64, i_yy: f64, gravity: f64) -> RobotModel {
    let inertia = Mat3::from_diagonal(&Vec3::new(0.5 * i_yy, i_yy, 0.5 * i_yy));
    let link = LinkParams::new(mass, Vec3::new(length, 0.0, 0.0), inertia);
    let joint = JointDescription {
        omega_space: axis,
        point_on_axis: Vec3::zeros(),
        parent_to_child_home: RigidTransform::identity(),
        home_pose_space: Some(RigidTransform::identity()),
    };
    RobotModel::new("pendulum", gravity, RigidTransform::identity(), vec![link], vec![joint])
        .expect("pendulum parameters are valid")
}

fn unit(rng: &mut impl Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.2 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_rotation(rng: &mut impl Rng) -> Mat3 {
    let axis = unit(rng);
    exp_so3(&axis, rng.random_range(-3.0..3.0)).expect("unit axis")
}

/// Random link with a physically valid inertia tensor.
pub fn random_link(rng: &mut impl Rng) -> LinkParams {
    let a: f64 = rng.random_range(0.01..0.2);
    let b = rng.random_range(0.01..0.2);
    let lo = (a - b).abs() + 1e-3;
    let c = rng.random_range(lo..a + b);
    let r = random_rotation(rng);
    let i = r * Mat3::from_diagonal(&Vec3::new(a, b, c)) * r.transpose();
    let com = Vec3::new(
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
    );
    LinkParams::new(rng.random_range(0.5..5.0), com, (i + i.transpose()) * 0.5)
}

/// Random `n`-joint chain with rotated link frames, arbitrary joint axes and
/// home poses that agree with the relative-transform chain.
pub fn random_model(rng: &mut impl Rng, n: usize) -> RobotModel {
    let base = RigidTransform::new(
        random_rotation(rng),
        Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 0.0),
    );
    let mut chain = base;
    let mut joints = Vec::with_capacity(n);
    for _ in 0..n {
        let rel = RigidTransform::new(
            random_rotation(rng),
            Vec3::new(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(0.05..0.4),
            ),
        );
        chain = chain * rel;
        let body_axis = unit(rng);
        joints.push(JointDescription {
            omega_space: chain.rotation * body_axis,
            point_on_axis: chain.translation,
            parent_to_child_home: rel,
            home_pose_space: Some(chain),
        });
    }
    let links = (0..n).map(|_| random_link(rng)).collect();
    RobotModel::new("random", crate::model::STANDARD_GRAVITY, base, links, joints)
        .expect("random model is valid")
}
