//! Serial-chain and platform models.
//!
//! A [`RobotModel`] carries both parameterizations of the same chain: the
//! relative link transforms `f_{i-1,i}(0)` with body screws `s_i = [ω; 0]`
//! used by the recursive and matrix formulations, and the space screws
//! `S_i = [ω; −ω × q]` with home poses `M_si` used by product of exponentials.

mod file;

pub use file::{parse_model, parse_model_with, serialize_model, ParseOptions, Parsed};

use nalgebra::{DVector, SymmetricEigen};
use thiserror::Error;

use crate::spatial::{skew, Mat3, Mat6, RigidTransform, SpatialError, Twist, Vec3, UNIT_AXIS_TOL};

/// Default gravitational acceleration in m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Tolerance on rotation-matrix orthonormality for transforms read from a model.
pub const ROTATION_TOL: f64 = 1e-9;

/// Maximum distance between a link frame origin and its joint axis.
pub const AXIS_OFFSET_TOL: f64 = 1e-9;

const INERTIA_SYM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("validation error at `{path}`: {message}")]
    Validation {
        path: String,
        link: Option<usize>,
        message: String,
    },
}

impl ModelError {
    fn validation(path: impl Into<String>, link: Option<usize>, message: impl Into<String>) -> Self {
        ModelError::Validation {
            path: path.into(),
            link,
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelError::Syntax { .. } => "SyntaxError",
            ModelError::Schema { .. } => "SchemaError",
            ModelError::Validation { .. } => "ValidationError",
        }
    }
}

/// Mass properties of one link, expressed in its link frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// kg
    pub mass: f64,
    /// Center of mass in the link frame, m.
    pub com: Vec3,
    /// Inertia about the center of mass, link-frame axes, kg·m².
    pub inertia_com: Mat3,
}

impl LinkParams {
    pub fn new(mass: f64, com: Vec3, inertia_com: Mat3) -> Self {
        Self {
            mass,
            com,
            inertia_com,
        }
    }

    pub fn point_mass(mass: f64, com: Vec3) -> Self {
        Self::new(mass, com, Mat3::zeros())
    }

    /// Checks the physical invariants; `Err` carries the offending field and reason.
    pub fn check(&self) -> Result<(), (&'static str, String)> {
        if !self.mass.is_finite() || self.mass <= 0.0 {
            return Err(("mass", format!("mass must be positive and finite, got {}", self.mass)));
        }
        if !self.com.iter().all(|x| x.is_finite()) {
            return Err(("com", "center of mass must be finite".into()));
        }
        let i = &self.inertia_com;
        if !i.iter().all(|x| x.is_finite()) {
            return Err(("inertia_com", "inertia must be finite".into()));
        }
        let scale = i.abs().max().max(1.0);
        let asym = (i - i.transpose()).abs().max();
        if asym > INERTIA_SYM_TOL * scale {
            return Err(("inertia_com", format!("inertia is not symmetric (max |I - Iᵀ| = {asym:e})")));
        }
        let sym = (i + i.transpose()) * 0.5;
        let mut eig = SymmetricEigen::new(sym).eigenvalues;
        eig.as_mut_slice().sort_by(|a, b| a.total_cmp(b));
        let tol = INERTIA_SYM_TOL * scale;
        if eig[0] < -tol {
            return Err((
                "inertia_com",
                format!("inertia is not positive semidefinite (smallest eigenvalue {:e})", eig[0]),
            ));
        }
        if eig[0] + eig[1] < eig[2] - tol {
            return Err((
                "inertia_com",
                format!(
                    "principal moments ({}, {}, {}) violate the triangle inequality",
                    eig[0], eig[1], eig[2]
                ),
            ));
        }
        Ok(())
    }
}

/// `J = [[I − m[r]², m[r]], [−m[r], m·I₃]]`, the spatial inertia about the
/// link frame origin for angular-first twists.
pub fn spatial_inertia(link: &LinkParams) -> Mat6 {
    let m = link.mass;
    let r = skew(&link.com);
    let mut j = Mat6::zeros();
    j.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(link.inertia_com - r * r * m));
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&(r * m));
    j.fixed_view_mut::<3, 3>(3, 0).copy_from(&(r * -m));
    j.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Mat3::identity() * m));
    j
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum JointKind {
    #[default]
    Revolute,
}

/// Geometric description of one joint, as written in a model file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDescription {
    /// Unit rotation axis in the space frame.
    pub omega_space: Vec3,
    /// Any point on the joint axis, space frame.
    pub point_on_axis: Vec3,
    /// `f_{i-1,i}` at zero joint angle.
    pub parent_to_child_home: RigidTransform,
    /// `M_si`, the link frame at zero configuration in the space frame.
    pub home_pose_space: Option<RigidTransform>,
}

/// A validated joint with both screw representations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointSpec {
    pub kind: JointKind,
    /// `s_i = [ω; 0]` in the joint's own link frame.
    pub body_screw: Twist,
    /// `S_i = [ω; −ω × q]` in the space frame.
    pub space_screw: Twist,
    pub point_on_axis: Vec3,
    pub parent_to_child_home: RigidTransform,
    pub home_pose_space: Option<RigidTransform>,
}

impl JointSpec {
    pub fn description(&self) -> JointDescription {
        JointDescription {
            omega_space: self.space_screw.angular,
            point_on_axis: self.point_on_axis,
            parent_to_child_home: self.parent_to_child_home,
            home_pose_space: self.home_pose_space,
        }
    }
}

/// Additive joint-torque term. Only the frictionless model exists; the hook
/// keeps the dynamics signatures stable when one is added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrictionModel {
    #[default]
    None,
}

impl FrictionModel {
    pub fn torque(&self, qd: &DVector<f64>) -> DVector<f64> {
        match self {
            FrictionModel::None => DVector::zeros(qd.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub name: String,
    pub links: Vec<LinkParams>,
    pub joints: Vec<JointSpec>,
    /// Magnitude of gravity along −z of the space frame, m/s².
    pub gravity: f64,
    /// Pose of chain frame 0 in the space frame.
    pub base_pose: RigidTransform,
    pub friction: FrictionModel,
    pub notes: Vec<String>,
}

fn check_transform(t: &RigidTransform, path: &str, link: Option<usize>) -> Result<(), ModelError> {
    if !t.rotation.iter().chain(t.translation.iter()).all(|x| x.is_finite()) {
        return Err(ModelError::validation(path, link, "transform must be finite"));
    }
    let err = t.rotation_error();
    if err > ROTATION_TOL {
        return Err(ModelError::validation(
            format!("{path}.rotation"),
            link,
            format!("rotation is not orthonormal with det +1 (error {err:e})"),
        ));
    }
    Ok(())
}

impl RobotModel {
    /// Builds and validates a model from link mass properties and joint
    /// geometry. Body screws are derived from the chain of home transforms;
    /// each link frame origin must lie on its joint axis.
    pub fn new(
        name: impl Into<String>,
        gravity: f64,
        base_pose: RigidTransform,
        links: Vec<LinkParams>,
        joints: Vec<JointDescription>,
    ) -> Result<Self, ModelError> {
        if joints.is_empty() {
            return Err(ModelError::validation("joints", None, "model needs at least one joint"));
        }
        if links.len() != joints.len() {
            return Err(ModelError::validation(
                "links",
                None,
                format!("{} links but {} joints", links.len(), joints.len()),
            ));
        }
        if !gravity.is_finite() {
            return Err(ModelError::validation("gravity", None, "gravity must be finite"));
        }
        check_transform(&base_pose, "base_pose", None)?;
        for (i, link) in links.iter().enumerate() {
            link.check()
                .map_err(|(field, msg)| ModelError::validation(format!("links[{i}].{field}"), Some(i), msg))?;
        }

        let mut chain = base_pose;
        let mut specs = Vec::with_capacity(joints.len());
        for (i, j) in joints.iter().enumerate() {
            let path = format!("joints[{i}]");
            let space_screw = screw_from_geometry(&j.omega_space, &j.point_on_axis).map_err(|e| {
                ModelError::validation(format!("{path}.omega_space"), Some(i), e.to_string())
            })?;
            if !j.point_on_axis.iter().all(|x| x.is_finite()) {
                return Err(ModelError::validation(
                    format!("{path}.point_on_axis"),
                    Some(i),
                    "point must be finite",
                ));
            }
            check_transform(&j.parent_to_child_home, &format!("{path}.parent_to_child_home"), Some(i))?;
            if let Some(home) = &j.home_pose_space {
                check_transform(home, &format!("{path}.home_pose_space"), Some(i))?;
            }
            chain = chain * j.parent_to_child_home;
            let offset = j.omega_space.cross(&(chain.translation - j.point_on_axis)).norm();
            if offset > AXIS_OFFSET_TOL {
                return Err(ModelError::validation(
                    format!("{path}.parent_to_child_home"),
                    Some(i),
                    format!("link frame origin is {offset:e} m off the joint axis"),
                ));
            }
            let body_axis = chain.rotation.transpose() * j.omega_space;
            specs.push(JointSpec {
                kind: JointKind::Revolute,
                body_screw: Twist::new(body_axis, Vec3::zeros()),
                space_screw,
                point_on_axis: j.point_on_axis,
                parent_to_child_home: j.parent_to_child_home,
                home_pose_space: j.home_pose_space,
            });
        }

        Ok(Self {
            name: name.into(),
            links,
            joints: specs,
            gravity,
            base_pose,
            friction: FrictionModel::None,
            notes: Vec::new(),
        })
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Link frames at zero configuration, obtained by chaining
    /// `base_pose · f_{0,1}(0) · … · f_{i-1,i}(0)`.
    pub fn chain_home_poses(&self) -> Vec<RigidTransform> {
        let mut chain = self.base_pose;
        self.joints
            .iter()
            .map(|j| {
                chain = chain * j.parent_to_child_home;
                chain
            })
            .collect()
    }

    pub fn has_home_poses(&self) -> bool {
        self.joints.iter().all(|j| j.home_pose_space.is_some())
    }

    /// Fills missing `home_pose_space` entries from the relative transform chain.
    pub fn with_chain_home_poses(mut self) -> Self {
        let chain = self.chain_home_poses();
        for (j, c) in self.joints.iter_mut().zip(chain) {
            j.home_pose_space.get_or_insert(c);
        }
        self
    }

    pub fn with_gravity(&self, gravity: f64) -> Self {
        Self {
            gravity,
            ..self.clone()
        }
    }

    /// Base-frame spatial acceleration that injects gravity: the base is
    /// accelerated upward by `g` along space +z, expressed in chain frame 0.
    pub fn base_acceleration(&self, gravity: f64) -> Twist {
        let up = Vec3::new(0.0, 0.0, gravity);
        Twist::new(Vec3::zeros(), self.base_pose.rotation.transpose() * up)
    }
}

/// An arm on a spherical air bearing with a static control box.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformModel {
    pub arm: RobotModel,
    pub control_box: LinkParams,
    /// Arm space frame expressed in the platform frame B.
    pub bearing_to_arm_base: RigidTransform,
    /// Control-box frame expressed in the platform frame B.
    pub bearing_to_box: RigidTransform,
    /// Platform attitude, mapping B components to inertial N components.
    /// Constant because the bearing is locked.
    pub platform_attitude: RigidTransform,
}

impl PlatformModel {
    pub fn new(
        arm: RobotModel,
        control_box: LinkParams,
        bearing_to_arm_base: RigidTransform,
        bearing_to_box: RigidTransform,
        platform_attitude: Mat3,
    ) -> Result<Self, ModelError> {
        control_box
            .check()
            .map_err(|(field, msg)| ModelError::validation(format!("platform.control_box.{field}"), None, msg))?;
        check_transform(&bearing_to_arm_base, "platform.bearing_to_arm_base", None)?;
        check_transform(&bearing_to_box, "platform.bearing_to_box", None)?;
        let attitude = RigidTransform::from_rotation(platform_attitude);
        check_transform(&attitude, "platform.attitude", None)?;
        Ok(Self {
            arm,
            control_box,
            bearing_to_arm_base,
            bearing_to_box,
            platform_attitude: attitude,
        })
    }

    pub fn with_gravity(&self, gravity: f64) -> Self {
        Self {
            arm: self.arm.with_gravity(gravity),
            ..self.clone()
        }
    }
}

/// Parsed model file contents.
#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)] // one per loaded file
pub enum Model {
    Arm(RobotModel),
    Platform(PlatformModel),
}

impl Model {
    pub fn arm(&self) -> &RobotModel {
        match self {
            Model::Arm(a) => a,
            Model::Platform(p) => &p.arm,
        }
    }

    pub fn platform(&self) -> Option<&PlatformModel> {
        match self {
            Model::Arm(_) => None,
            Model::Platform(p) => Some(p),
        }
    }
}

/// `[ω; −ω × q]` for a unit axis `ω` through the point `q`.
pub fn screw_from_geometry(omega: &Vec3, point_on_axis: &Vec3) -> Result<Twist, SpatialError> {
    let norm = omega.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_AXIS_TOL {
        return Err(SpatialError::NonUnitAxis { norm });
    }
    Ok(Twist::new(*omega, -omega.cross(point_on_axis)))
}

/// Space-frame screw axes of the Sawyer arm in its x-extended zero pose.
pub fn sawyer_screw_table() -> [Twist; 7] {
    [
        Twist::from_slice(&[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
        Twist::from_slice(&[0.0, 1.0, 0.0, -0.317, 0.0, 0.081]),
        Twist::from_slice(&[1.0, 0.0, 0.0, 0.0, 0.317, -0.1925]),
        Twist::from_slice(&[0.0, 1.0, 0.0, -0.317, 0.0, 0.481]),
        Twist::from_slice(&[1.0, 0.0, 0.0, 0.0, 0.317, -0.024]),
        Twist::from_slice(&[0.0, 1.0, 0.0, -0.317, 0.0, 0.881]),
        Twist::from_slice(&[1.0, 0.0, 0.0, 0.0, 0.317, -0.1603]),
    ]
}

/// Relative home transform for one row of a modified (Craig) D-H table:
/// `Rot_x(α_{i-1})·Trans_x(a_{i-1})·Trans_z(d_i)·Rot_z(θ_offset)`.
///
/// The joint then rotates about the child frame's z axis.
pub fn dh_modified(a: f64, alpha: f64, d: f64, theta_offset: f64) -> RigidTransform {
    let rx = crate::spatial::exp_so3_unchecked(&Vec3::x(), alpha);
    let rz = crate::spatial::exp_so3_unchecked(&Vec3::z(), theta_offset);
    let to_joint = RigidTransform::new(rx, Vec3::new(a, 0.0, 0.0) + rx * Vec3::new(0.0, 0.0, d));
    to_joint * RigidTransform::from_rotation(rz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spatial_inertia_zero_com_is_block_diagonal() {
        let i = Mat3::new(0.3, 0.01, 0.0, 0.01, 0.2, 0.0, 0.0, 0.0, 0.25);
        let j = spatial_inertia(&LinkParams::new(2.0, Vec3::zeros(), i));
        let mut expected = Mat6::zeros();
        expected.fixed_view_mut::<3, 3>(0, 0).copy_from(&i);
        expected
            .fixed_view_mut::<3, 3>(3, 3)
            .copy_from(&(Mat3::identity() * 2.0));
        assert_eq!(j, expected);
    }

    #[test]
    fn spatial_inertia_point_mass_parallel_axis() {
        let j = spatial_inertia(&LinkParams::point_mass(2.0, Vec3::x()));
        let top_left = j.fixed_view::<3, 3>(0, 0).into_owned();
        assert_eq!(top_left, Mat3::from_diagonal(&Vec3::new(0.0, 2.0, 2.0)));
    }

    #[test]
    fn spatial_inertia_symmetric_and_pd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let link = crate::fixtures::random_link(&mut rng);
            let j = spatial_inertia(&link);
            assert!((j - j.transpose()).abs().max() < 1e-14);
            assert!(j.cholesky().is_some());
        }
    }

    #[test]
    fn sawyer_table_entries() {
        let t = sawyer_screw_table();
        assert_eq!(t[0].to_array(), [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(t[3].to_array(), [0.0, 1.0, 0.0, -0.317, 0.0, 0.481]);
        for s in &t {
            assert_eq!(s.angular.dot(&s.linear), 0.0);
            assert_eq!(s.angular.norm(), 1.0);
        }
    }

    #[test]
    fn screw_from_geometry_cases() {
        let s1 = screw_from_geometry(&Vec3::z(), &Vec3::zeros()).unwrap();
        assert_eq!(s1, sawyer_screw_table()[0]);
        let s2 = screw_from_geometry(&Vec3::y(), &Vec3::new(0.081, 0.0, 0.317)).unwrap();
        assert_eq!(s2, sawyer_screw_table()[1]);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = Vec3::new(0.0, 0.6, 0.8);
        let q = Vec3::new(0.3, -0.2, 0.5);
        let base = screw_from_geometry(&w, &q).unwrap();
        for _ in 0..20 {
            let shifted = q + w * rng.random_range(-5.0..5.0);
            let s = screw_from_geometry(&w, &shifted).unwrap();
            assert_relative_eq!(s.linear, base.linear, epsilon = 1e-14);
        }
        assert!(screw_from_geometry(&Vec3::new(1.0, 1.0, 0.0), &q).is_err());
    }

    #[test]
    fn link_invariants() {
        let ok = LinkParams::new(1.0, Vec3::zeros(), Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 1.5)));
        assert!(ok.check().is_ok());
        let bad_mass = LinkParams { mass: -1.0, ..ok };
        assert_eq!(bad_mass.check().unwrap_err().0, "mass");
        let tri = LinkParams::new(1.0, Vec3::zeros(), Mat3::from_diagonal(&Vec3::new(1.0, 1.0, 2.5)));
        assert_eq!(tri.check().unwrap_err().0, "inertia_com");
        let mut asym = ok;
        asym.inertia_com[(0, 1)] = 0.1;
        assert!(asym.check().is_err());
        let npd = LinkParams::new(1.0, Vec3::zeros(), Mat3::from_diagonal(&Vec3::new(-0.1, 1.0, 1.0)));
        assert!(npd.check().is_err());
    }

    #[test]
    fn model_rejects_frame_off_axis() {
        let link = LinkParams::point_mass(1.0, Vec3::x());
        let joint = JointDescription {
            omega_space: Vec3::z(),
            point_on_axis: Vec3::zeros(),
            parent_to_child_home: RigidTransform::from_translation(Vec3::new(0.1, 0.0, 0.0)),
            home_pose_space: None,
        };
        let err = RobotModel::new("x", STANDARD_GRAVITY, RigidTransform::identity(), vec![link], vec![joint]).unwrap_err();
        assert!(matches!(err, ModelError::Validation { link: Some(0), .. }));
    }

    #[test]
    fn body_screw_follows_frame_rotation() {
        let r = crate::spatial::exp_so3(&Vec3::x(), std::f64::consts::FRAC_PI_2).unwrap();
        let joint = JointDescription {
            omega_space: Vec3::y(),
            point_on_axis: Vec3::zeros(),
            parent_to_child_home: RigidTransform::from_rotation(r),
            home_pose_space: None,
        };
        let m = RobotModel::new(
            "rot",
            0.0,
            RigidTransform::identity(),
            vec![LinkParams::point_mass(1.0, Vec3::x())],
            vec![joint],
        )
        .unwrap();
        // Rot_x(90°) maps local −z onto space y.
        assert_relative_eq!(m.joints[0].body_screw.angular, -Vec3::z(), epsilon = 1e-15);
        assert!(!m.has_home_poses());
        assert!(m.clone().with_chain_home_poses().has_home_poses());
    }

    #[test]
    fn dh_modified_places_joint_on_child_z() {
        let t = dh_modified(0.5, std::f64::consts::FRAC_PI_2, 0.2, 0.0);
        // Child z axis is parent z rotated about x by α.
        assert_relative_eq!(t.rotation * Vec3::z(), -Vec3::y(), epsilon = 1e-15);
        assert_relative_eq!(t.translation, Vec3::new(0.5, -0.2, 0.0), epsilon = 1e-15);
    }
}
