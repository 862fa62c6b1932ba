//! Reaction torque at a locked spherical air bearing carrying the arm.
//!
//! Each body is handled in its own link frame B_i, where its inertia about
//! the center of mass is constant. The momentum about the bearing point `o`
//! is
//!
//! ```text
//! H_o = (I_com + m·[r×][r×]ᵀ)·ω
//! ```
//!
//! with `r = r_com + Rᵀ·r_l` the center of mass measured from the bearing.
//! Its inertial rate follows from the transport theorem,
//!
//! ```text
//! Ḣ_o = İ_o·ω + I_o·ω̇ + ω × I_o·ω,   İ_o = m·([ṙ×][r×]ᵀ + [r×][ṙ×]ᵀ)
//! ```
//!
//! where `ṙ` is the rate of `r` seen from B_i. Results are rotated to the
//! inertial frame N and summed with the gravity moments `r × F` of all
//! bodies, including the static control box.

use std::cmp::Ordering;

use nalgebra::DVector;

use crate::kinematics::{forward_sweep, link_frames_dh, JointState};
use crate::model::{LinkParams, PlatformModel};
use crate::spatial::{skew, Mat3, Twist, Vec3};
use crate::trajectory::TrajectoryError;

/// Kinematics of one body's center of mass relative to the bearing, all in
/// that body's own frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyKinematicState {
    /// Center of mass measured from the bearing, m.
    pub r_body: Vec3,
    /// Inertial velocity of the center of mass, m/s.
    pub r_dot: Vec3,
    /// Inertial acceleration of the center of mass, m/s².
    pub r_ddot: Vec3,
    /// rad/s
    pub omega_body: Vec3,
    /// rad/s²
    pub omega_dot: Vec3,
    /// Body frame to inertial frame.
    pub rotation: Mat3,
}

impl BodyKinematicState {
    pub fn static_at(r_body: Vec3, rotation: Mat3) -> Self {
        Self {
            r_body,
            r_dot: Vec3::zeros(),
            r_ddot: Vec3::zeros(),
            omega_body: Vec3::zeros(),
            omega_dot: Vec3::zeros(),
            rotation,
        }
    }

    /// Center-of-mass position in the inertial frame.
    pub fn position_inertial(&self) -> Vec3 {
        self.rotation * self.r_body
    }

    pub fn velocity_inertial(&self) -> Vec3 {
        self.rotation * self.r_dot
    }

    /// Rate of `r_body` as seen from the rotating body frame.
    pub fn r_rate_in_body(&self) -> Vec3 {
        self.r_dot - self.omega_body.cross(&self.r_body)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BearingTorque {
    /// Σ Ḣ_o, N·m
    pub dynamic: Vec3,
    /// Σ r × F, N·m
    pub gravitational: Vec3,
    /// `dynamic + gravitational`
    pub total: Vec3,
}

/// Which expression is used for a body's momentum about the bearing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentumForm {
    /// `(I_com + m[r×][r×]ᵀ)·ω`, the parallel-axis form.
    #[default]
    ParallelAxis,
    /// `I_com·ω + m·r × ṙ`, including translation of the center of mass.
    WithTranslational,
}

/// Per-body states: one per arm link followed by the control box, which
/// never moves.
pub fn body_states_from_arm(platform: &PlatformModel, state: &JointState) -> Vec<BodyKinematicState> {
    let arm = &platform.arm;
    let mount = platform.platform_attitude * platform.bearing_to_arm_base;
    let frames = link_frames_dh(arm, state.q.as_slice());
    let motion = forward_sweep(arm, state, Twist::zero());

    let mut bodies: Vec<_> = (0..arm.dof())
        .map(|i| {
            let pose = mount * frames.absolute[i];
            let c = arm.links[i].com;
            let v = motion.twists[i];
            let a = motion.accelerations[i];
            let (w, wd) = (v.angular, a.angular);
            let com_vel = v.linear + w.cross(&c);
            BodyKinematicState {
                r_body: c + pose.rotation.transpose() * pose.translation,
                r_dot: com_vel,
                r_ddot: a.linear + wd.cross(&c) + w.cross(&com_vel),
                omega_body: w,
                omega_dot: wd,
                rotation: pose.rotation,
            }
        })
        .collect();

    let box_pose = platform.platform_attitude * platform.bearing_to_box;
    bodies.push(BodyKinematicState::static_at(
        platform.control_box.com + box_pose.rotation.transpose() * box_pose.translation,
        box_pose.rotation,
    ));
    bodies
}

/// `m·[r×][r×]ᵀ`
fn parallel_axis(mass: f64, r: &Vec3) -> Mat3 {
    let rx = skew(r);
    rx * rx.transpose() * mass
}

/// `I_o = I_com + m[r×][r×]ᵀ`
pub fn inertia_about_bearing(body: &BodyKinematicState, link: &LinkParams) -> Mat3 {
    link.inertia_com + parallel_axis(link.mass, &body.r_body)
}

/// `ᴮH_o = I_com·ω + m[r×][r×]ᵀ·ω`, body-frame components.
pub fn angular_momentum_about_bearing(body: &BodyKinematicState, link: &LinkParams) -> Vec3 {
    angular_momentum_with(body, link, MomentumForm::ParallelAxis)
}

pub fn angular_momentum_with(body: &BodyKinematicState, link: &LinkParams, form: MomentumForm) -> Vec3 {
    match form {
        MomentumForm::ParallelAxis => inertia_about_bearing(body, link) * body.omega_body,
        MomentumForm::WithTranslational => {
            link.inertia_com * body.omega_body + body.r_body.cross(&body.r_dot) * link.mass
        }
    }
}

/// Inertial rate of the momentum about the bearing, body-frame components.
pub fn h_dot_about_bearing(body: &BodyKinematicState, link: &LinkParams) -> Vec3 {
    h_dot_with(body, link, MomentumForm::ParallelAxis)
}

pub fn h_dot_with(body: &BodyKinematicState, link: &LinkParams, form: MomentumForm) -> Vec3 {
    let w = &body.omega_body;
    let wd = &body.omega_dot;
    match form {
        MomentumForm::ParallelAxis => {
            let io = inertia_about_bearing(body, link);
            let rx = skew(&body.r_body);
            let rdx = skew(&body.r_rate_in_body());
            // İ_com = 0 in the body frame.
            let io_dot = (rdx * rx.transpose() + rx * rdx.transpose()) * link.mass;
            io_dot * w + io * wd + w.cross(&(io * w))
        }
        MomentumForm::WithTranslational => {
            let ic = &link.inertia_com;
            ic * wd + w.cross(&(ic * w)) + body.r_body.cross(&body.r_ddot) * link.mass
        }
    }
}

/// `r × F` for the body's weight, `F = (0, 0, −m·g)` in N.
pub fn gravity_moment(body: &BodyKinematicState, link: &LinkParams, gravity: f64) -> Vec3 {
    body.position_inertial()
        .cross(&Vec3::new(0.0, 0.0, -link.mass * gravity))
}

fn bodies_and_links<'a>(
    platform: &'a PlatformModel,
    state: &JointState,
) -> impl Iterator<Item = (BodyKinematicState, &'a LinkParams)> {
    body_states_from_arm(platform, state)
        .into_iter()
        .zip(platform.arm.links.iter().chain(std::iter::once(&platform.control_box)))
}

pub fn total_bearing_torque(platform: &PlatformModel, state: &JointState) -> BearingTorque {
    total_bearing_torque_with(platform, state, MomentumForm::ParallelAxis)
}

/// Sum over all bodies of `Ḣ_o + r × F`, expressed in N. The control box
/// contributes only its weight.
pub fn total_bearing_torque_with(platform: &PlatformModel, state: &JointState, form: MomentumForm) -> BearingTorque {
    let n = platform.arm.dof();
    let g = platform.arm.gravity;
    let mut dynamic = Vec3::zeros();
    let mut gravitational = Vec3::zeros();
    for (i, (body, link)) in bodies_and_links(platform, state).enumerate() {
        if i < n {
            dynamic += body.rotation * h_dot_with(&body, link, form);
        }
        gravitational += gravity_moment(&body, link, g);
    }
    BearingTorque {
        dynamic,
        gravitational,
        total: dynamic + gravitational,
    }
}

/// Total momentum about the bearing in N. Depends on `q` and `q̇` only.
pub fn total_angular_momentum(platform: &PlatformModel, q: &DVector<f64>, qd: &DVector<f64>, form: MomentumForm) -> Vec3 {
    let state = JointState::new(q.clone(), qd.clone(), DVector::zeros(q.len()));
    bodies_and_links(platform, &state)
        .map(|(body, link)| body.rotation * angular_momentum_with(&body, link, form))
        .sum()
}

/// Time series of bearing torques, as written by the command-line tool.
#[derive(Debug, Clone, PartialEq)]
pub struct BearingProfile {
    pub t: Vec<f64>,
    pub torques: Vec<BearingTorque>,
}

const BEARING_HEADER: [&str; 10] = [
    "t", "tx", "ty", "tz", "dyn_x", "dyn_y", "dyn_z", "grav_x", "grav_y", "grav_z",
];

impl BearingProfile {
    pub fn write_csv(&self, writer: impl std::io::Write) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(BEARING_HEADER)?;
        for (t, b) in self.t.iter().zip(&self.torques) {
            let row = std::iter::once(*t)
                .chain(b.total.iter().copied())
                .chain(b.dynamic.iter().copied())
                .chain(b.gravitational.iter().copied())
                .map(crate::trajectory::fmt_f64);
            w.write_record(row)?;
        }
        w.flush()
    }

    pub fn read_csv(reader: impl std::io::Read) -> Result<Self, TrajectoryError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let header = rdr.headers().map_err(|e| csv_error(0, "", e))?;
        if header.iter().map(str::trim).ne(BEARING_HEADER) {
            return Err(csv_error(0, header.iter().collect::<Vec<_>>().join(","), "unexpected bearing-torque header"));
        }
        let mut profile = BearingProfile { t: Vec::new(), torques: Vec::new() };
        for (idx, record) in rdr.records().enumerate() {
            let row = idx + 1;
            let record = record.map_err(|e| csv_error(row, "", e))?;
            if record.len() != BEARING_HEADER.len() {
                return Err(csv_error(row, "", format!("expected 10 fields, found {}", record.len())));
            }
            let mut v = [0.0; 10];
            for (k, field) in record.iter().enumerate() {
                v[k] = field
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| csv_error(row, BEARING_HEADER[k], format!("`{field}` is not a finite number")))?;
            }
            if let Some(&prev) = profile.t.last() {
                if v[0].partial_cmp(&prev) != Some(Ordering::Greater) {
                    return Err(TrajectoryError::NonMonotoneTime { row, previous: prev, t: v[0] });
                }
            }
            profile.t.push(v[0]);
            profile.torques.push(BearingTorque {
                total: Vec3::new(v[1], v[2], v[3]),
                dynamic: Vec3::new(v[4], v[5], v[6]),
                gravitational: Vec3::new(v[7], v[8], v[9]),
            });
        }
        Ok(profile)
    }
}

fn csv_error(row: usize, column: impl Into<String>, message: impl ToString) -> TrajectoryError {
    TrajectoryError::CsvFormat {
        row,
        column: column.into(),
        message: message.to_string(),
    }
}
