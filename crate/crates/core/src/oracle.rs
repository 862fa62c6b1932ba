//! Independent numerical checks of the dynamics.
//!
//! The energy used by [`power_balance_check`] is assembled from link
//! velocities and center-of-mass heights directly (`½m|v_c|² + ½ωᵀI_cω +
//! m·g·z`), without any spatial-inertia or mass-matrix code, so it can catch
//! mistakes in all three inverse-dynamics formulations. Time derivatives are
//! central differences with a 1 µs step, where the neighbouring states come
//! from a second-order Taylor step `q ± h·q̇ + ½h²·q̈`, `q̇ ± h·q̈`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::batch::{self, Execution};
use crate::dynamics::{self, PoeChain};
use crate::kinematics::{body_twists, link_frames_dh, JointState, KinematicsError};
use crate::model::{PlatformModel, RobotModel};
use crate::platform::{self, MomentumForm};
use crate::spatial::Vec3;
use crate::trajectory::Trajectory;

/// Step for time derivatives, s.
pub const FD_STEP: f64 = 1e-6;
/// Step for configuration derivatives, rad.
pub const FD_STEP_Q: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub name: String,
    /// `"absolute"` or `"relative"`: which error is held to `tolerance`.
    pub metric: &'static str,
    pub max_abs_error: f64,
    pub rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub details: BTreeMap<String, f64>,
}

impl OracleReport {
    fn relative(name: &str, max_abs_error: f64, scale: f64, tolerance: f64) -> Self {
        let rel_error = if scale > 0.0 { max_abs_error / scale } else { max_abs_error };
        Self {
            name: name.to_string(),
            metric: "relative",
            max_abs_error,
            rel_error,
            tolerance,
            passed: rel_error <= tolerance,
            details: BTreeMap::new(),
        }
    }

    fn absolute(name: &str, max_abs_error: f64, scale: f64, tolerance: f64) -> Self {
        Self {
            metric: "absolute",
            passed: max_abs_error <= tolerance,
            ..Self::relative(name, max_abs_error, scale, tolerance)
        }
    }

    fn detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    fn per_joint(mut self, prefix: &str, values: &DVector<f64>) -> Self {
        for (j, v) in values.iter().enumerate() {
            self.details.insert(format!("{prefix}{}", j + 1), *v);
        }
        self
    }

    /// One-line JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// `(I_yy + m·l²)·q̈ + m·g·l·cos q` for a single link whose center of mass
/// sits at distance `l` from a horizontal axis, `q` measured from the
/// horizontal.
pub fn pendulum_reference(m: f64, l: f64, i_yy: f64, g: f64, q: f64, qdd: f64) -> f64 {
    (i_yy + m * l * l) * qdd + m * g * l * q.cos()
}

/// Mass matrix from unit-acceleration probes of the recursive solver with
/// gravity and joint rates switched off. Exact up to rounding since torque
/// is linear in `q̈`.
pub fn fd_mass_matrix(model: &RobotModel, q: &[f64]) -> DMatrix<f64> {
    let n = model.dof();
    let mut m = DMatrix::zeros(n, n);
    let mut state = JointState::at_rest(DVector::from_column_slice(q));
    for j in 0..n {
        state.qdd[j] = 1.0;
        m.set_column(j, &dynamics::rnea(model, &state, 0.0));
        state.qdd[j] = 0.0;
    }
    m
}

pub fn kinetic_energy(model: &RobotModel, q: &[f64], qd: &[f64]) -> f64 {
    body_twists(model, q, qd)
        .iter()
        .zip(&model.links)
        .map(|(v, link)| {
            let w = v.angular;
            let vc = v.linear + w.cross(&link.com);
            0.5 * link.mass * vc.norm_squared() + 0.5 * w.dot(&(link.inertia_com * w))
        })
        .sum()
}

/// `Σ m·g·z_com`, with the space frame's +z pointing up.
pub fn potential_energy(model: &RobotModel, q: &[f64]) -> f64 {
    link_frames_dh(model, q)
        .absolute
        .iter()
        .zip(&model.links)
        .map(|(pose, link)| link.mass * model.gravity * pose.transform_point(&link.com).z)
        .sum()
}

pub fn total_energy(model: &RobotModel, q: &[f64], qd: &[f64]) -> f64 {
    kinetic_energy(model, q, qd) + potential_energy(model, q)
}

/// State a time `dt` away, by a second-order Taylor step.
fn taylor(state: &JointState, dt: f64) -> (DVector<f64>, DVector<f64>) {
    let q = &state.q + &state.qd * dt + &state.qdd * (0.5 * dt * dt);
    let qd = &state.qd + &state.qdd * dt;
    (q, qd)
}

/// `dE/dt` by central difference.
pub fn energy_rate(model: &RobotModel, state: &JointState) -> f64 {
    let (qp, qdp) = taylor(state, FD_STEP);
    let (qm, qdm) = taylor(state, -FD_STEP);
    (total_energy(model, qp.as_slice(), qdp.as_slice()) - total_energy(model, qm.as_slice(), qdm.as_slice()))
        / (2.0 * FD_STEP)
}

/// Compares joint power `q̇ᵀτ` with the rate of change of total mechanical
/// energy at every sample. Torques come from the trajectory when it carries
/// them, otherwise from the recursive solver. The relative error is the
/// worst residual over the largest power magnitude along the trajectory.
pub fn power_balance_check(model: &RobotModel, traj: &Trajectory) -> OracleReport {
    const TOL: f64 = 1e-5;
    let samples = traj.samples();
    let rows = batch::map(Execution::default(), samples, |s| {
        let state = s.state();
        let tau = s
            .tau
            .clone()
            .unwrap_or_else(|| dynamics::inverse_dynamics_recursive(model, &state));
        (state.qd.dot(&tau), energy_rate(model, &state))
    });
    // A NaN residual sticks and fails the report.
    let mut worst: (f64, f64) = (0.0, f64::NAN);
    let mut scale: f64 = 0.0;
    for ((p, e), s) in rows.iter().zip(samples) {
        scale = scale.max(p.abs()).max(e.abs());
        let r = (p - e).abs();
        if !worst.0.is_nan() && (r.is_nan() || r >= worst.0) {
            worst = (r, s.t);
        }
    }
    OracleReport::relative("power_balance", worst.0, scale, TOL)
        .detail("samples", samples.len() as f64)
        .detail("max_power", scale)
        .detail("worst_t", worst.1)
}

/// Central difference of the summed bearing momentum against the given
/// dynamic torques (one per sample, inertial frame).
pub fn fd_momentum_check_against(
    platform: &PlatformModel,
    traj: &Trajectory,
    dynamic: &[Vec3],
    form: MomentumForm,
) -> OracleReport {
    const TOL: f64 = 1e-5;
    assert_eq!(dynamic.len(), traj.len(), "one torque per sample");
    let fd = batch::map(Execution::default(), traj.samples(), |s| {
        let state = s.state();
        let (qp, qdp) = taylor(&state, FD_STEP);
        let (qm, qdm) = taylor(&state, -FD_STEP);
        (platform::total_angular_momentum(platform, &qp, &qdp, form)
            - platform::total_angular_momentum(platform, &qm, &qdm, form))
            / (2.0 * FD_STEP)
    });
    let mut max_err = Vec3::zeros();
    let mut scale: f64 = 0.0;
    for (a, b) in dynamic.iter().zip(&fd) {
        scale = scale.max(a.amax()).max(b.amax());
        max_err = max_err.sup(&(a - b).abs());
    }
    OracleReport::relative("fd_momentum", max_err.max(), scale, TOL)
        .detail("samples", traj.len() as f64)
        .detail("max_abs_x", max_err.x)
        .detail("max_abs_y", max_err.y)
        .detail("max_abs_z", max_err.z)
        .detail("max_torque", scale)
}

/// [`fd_momentum_check_against`] with the analytic dynamic torque.
pub fn fd_momentum_check(platform: &PlatformModel, traj: &Trajectory, form: MomentumForm) -> OracleReport {
    let dynamic = batch::map(Execution::default(), traj.samples(), |s| {
        platform::total_bearing_torque_with(platform, &s.state(), form).dynamic
    });
    fd_momentum_check_against(platform, traj, &dynamic, form)
}

/// With the arm at rest the dynamic torque must vanish exactly and the
/// total must equal the gravity moment.
pub fn static_platform_check(platform: &PlatformModel, traj: &Trajectory) -> OracleReport {
    let worst = traj
        .samples()
        .iter()
        .map(|s| {
            let t = platform::total_bearing_torque(platform, &JointState::at_rest(s.q.clone()));
            t.dynamic.amax().max((t.total - t.gravitational).amax())
        })
        .fold(0.0, f64::max);
    OracleReport::absolute("static_platform", worst, 0.0, 0.0).detail("samples", traj.len() as f64)
}

/// Matrix vs recursive and recursive vs product-of-exponentials torques.
pub fn cross_method_reports(model: &RobotModel, states: &[JointState]) -> Result<[OracleReport; 2], KinematicsError> {
    let chain = PoeChain::new(model)?;
    let n = model.dof();
    let rows = batch::map(Execution::default(), states, |s| {
        let rec = dynamics::inverse_dynamics_recursive(model, s);
        let mat = dynamics::inverse_dynamics_matrix(model, s).torque;
        let poe = dynamics::evaluate_poe(&chain, model, s).torque;
        ((&mat - &rec).abs(), (&rec - &poe).abs(), rec.amax())
    });
    let mut dm = DVector::zeros(n);
    let mut dp = DVector::zeros(n);
    let mut scale: f64 = 0.0;
    for (a, b, s) in &rows {
        dm = dm.sup(a);
        dp = dp.sup(b);
        scale = scale.max(*s);
    }
    Ok([
        OracleReport::absolute("matrix_vs_recursive", dm.max(), scale, 1e-9).per_joint("max_abs_", &dm),
        OracleReport::absolute("recursive_vs_poe", dp.max(), scale, 1e-8).per_joint("max_abs_", &dp),
    ])
}

/// Symmetry, positive definiteness and agreement of the closed-form mass
/// matrix with [`fd_mass_matrix`].
pub fn mass_matrix_report(model: &RobotModel, configs: &[DVector<f64>]) -> OracleReport {
    let rows = batch::map(Execution::default(), configs, |q| {
        let m = dynamics::mass_matrix(model, q.as_slice());
        let norm = m.norm();
        let asym = (&m - m.transpose()).amax() / norm;
        let probe = (&m - fd_mass_matrix(model, q.as_slice())).amax() / norm;
        let pd = m.clone().cholesky().is_some();
        (asym, probe, pd)
    });
    let asym = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let probe = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let failures = rows.iter().filter(|r| !r.2).count();
    let mut report = OracleReport::relative("mass_matrix", asym.max(probe), 1.0, 1e-10)
        .detail("configs", configs.len() as f64)
        .detail("max_asymmetry", asym)
        .detail("max_probe_error", probe)
        .detail("cholesky_failures", failures as f64);
    report.passed &= failures == 0;
    report
}

/// Gravity torque against the central-difference gradient of potential
/// energy.
pub fn gravity_gradient_report(model: &RobotModel, configs: &[DVector<f64>]) -> OracleReport {
    let n = model.dof();
    let rows = batch::map(Execution::default(), configs, |q| {
        let phi = dynamics::gravity_vector(model, q.as_slice());
        let mut grad = DVector::zeros(n);
        let mut qq = q.clone();
        for j in 0..n {
            qq[j] = q[j] + FD_STEP_Q;
            let up = potential_energy(model, qq.as_slice());
            qq[j] = q[j] - FD_STEP_Q;
            let down = potential_energy(model, qq.as_slice());
            qq[j] = q[j];
            grad[j] = (up - down) / (2.0 * FD_STEP_Q);
        }
        ((&phi - grad).amax(), phi.amax())
    });
    let err = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let scale = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    OracleReport::relative("gravity_gradient", err, scale, 1e-6).detail("configs", configs.len() as f64)
}
