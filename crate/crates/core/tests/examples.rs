//! Worked examples with known answers.

use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_relative_eq;
use nalgebra::DVector;

use armdyn::dynamics;
use armdyn::fixtures;
use armdyn::kinematics::fk_poe;
use armdyn::model::{parse_model, serialize_model, LinkParams, Model};
use armdyn::oracle;
use armdyn::platform::{self, BodyKinematicState};
use armdyn::spatial::{exp_se3, Mat3, Twist, Vec3};
use armdyn::trajectory::table1;
use armdyn::JointState;

#[test]
fn shipped_models_round_trip_through_the_file_format() {
    for text in [
        include_str!("../models/sawyer-kinematics.model"),
        include_str!("../models/synthetic-7dof.model"),
    ] {
        let model = parse_model(text).unwrap();
        let again = serialize_model(&model);
        assert_eq!(parse_model(&again).unwrap(), model);
    }
}

#[test]
fn sawyer_end_frame_at_rest_and_negated_by_base_turn() {
    let m = fixtures::sawyer_kinematics();
    let home = fk_poe(&m, &[0.0; 7], 7).unwrap();
    assert_relative_eq!(home.translation, Vec3::new(1.0, 0.1603, 0.317), epsilon = 1e-12);
    let turned = fk_poe(&m, &[PI, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 7).unwrap();
    assert_relative_eq!(turned.translation, Vec3::new(-1.0, -0.1603, 0.317), epsilon = 1e-12);
}

#[test]
fn second_sawyer_screw_half_turn() {
    let s = Twist::new(Vec3::y(), Vec3::new(-0.317, 0.0, 0.081));
    let t = exp_se3(&s, PI).unwrap();
    // Rotation by π about the y-directed line through (0.081, ·, 0.317).
    assert_relative_eq!(t.rotation, Mat3::from_diagonal(&Vec3::new(-1.0, 1.0, -1.0)), epsilon = 1e-15);
    assert_relative_eq!(t.translation, Vec3::new(0.162, 0.0, 0.634), epsilon = 1e-15);
}

#[test]
fn pendulum_hangs_in_equilibrium() {
    let p = fixtures::pendulum(2.0, 0.5, 0.1, 9.80665);
    let tau = dynamics::inverse_dynamics_recursive(&p, &JointState::at_rest(DVector::from_element(1, -FRAC_PI_2)));
    // cos(−π/2) rounds to 6e-17, not zero.
    assert!(tau[0].abs() < 1e-14);
}

#[test]
fn gravity_moment_of_offset_mass() {
    let link = LinkParams::point_mass(1.0, Vec3::zeros());
    let body = BodyKinematicState::static_at(Vec3::x(), Mat3::identity());
    assert_relative_eq!(
        platform::gravity_moment(&body, &link, 9.80665),
        Vec3::new(0.0, 9.80665, 0.0),
        epsilon = 1e-15
    );
}

#[test]
fn platform_block_survives_parsing() {
    let m = parse_model(include_str!("../models/synthetic-7dof.model")).unwrap();
    let Model::Platform(p) = m else { panic!("expected a platform block") };
    assert_eq!(p.control_box.mass, 25.0);
    let traj = table1(7, 0.0, 1.0, 0.01);
    assert!(oracle::fd_momentum_check(&p, &traj, Default::default()).passed);
}
