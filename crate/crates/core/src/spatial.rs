//! Screw-theoretic primitives on SE(3).
//!
//! Every six-vector in this crate is ordered angular-first: a twist is
//! `[ω; v]` and a wrench is `[moment; force]`. There is no linear-first API.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Mat6 = Matrix6<f64>;
pub type Mat4 = Matrix4<f64>;

/// Allowed deviation of a screw axis from unit length.
pub const UNIT_AXIS_TOL: f64 = 1e-9;

/// Below this angle the translational series terms switch to Taylor forms.
pub const SMALL_ANGLE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpatialError {
    #[error("rotation axis must be unit length (|omega| = {norm})")]
    NonUnitAxis { norm: f64 },
    #[error("screw must have a unit angular part or be a unit pure translation (|omega| = {angular}, |v| = {linear})")]
    NonUnitScrew { angular: f64, linear: f64 },
}

/// Spatial velocity, screw axis or spatial acceleration, `[ω; v]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist {
    pub angular: Vec3,
    pub linear: Vec3,
}

impl Twist {
    pub fn new(angular: Vec3, linear: Vec3) -> Self {
        Self { angular, linear }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_slice(v: &[f64; 6]) -> Self {
        Self {
            angular: Vec3::new(v[0], v[1], v[2]),
            linear: Vec3::new(v[3], v[4], v[5]),
        }
    }

    pub fn from_vector(v: &Vec6) -> Self {
        Self {
            angular: v.fixed_rows::<3>(0).into_owned(),
            linear: v.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn to_vector(&self) -> Vec6 {
        Vec6::new(
            self.angular.x,
            self.angular.y,
            self.angular.z,
            self.linear.x,
            self.linear.y,
            self.linear.z,
        )
    }

    pub fn to_array(&self) -> [f64; 6] {
        [
            self.angular.x,
            self.angular.y,
            self.angular.z,
            self.linear.x,
            self.linear.y,
            self.linear.z,
        ]
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.angular * s, self.linear * s)
    }
}

impl Add for Twist {
    type Output = Twist;
    fn add(self, rhs: Twist) -> Twist {
        Twist::new(self.angular + rhs.angular, self.linear + rhs.linear)
    }
}

impl Sub for Twist {
    type Output = Twist;
    fn sub(self, rhs: Twist) -> Twist {
        Twist::new(self.angular - rhs.angular, self.linear - rhs.linear)
    }
}

impl Neg for Twist {
    type Output = Twist;
    fn neg(self) -> Twist {
        Twist::new(-self.angular, -self.linear)
    }
}

impl Mul<f64> for Twist {
    type Output = Twist;
    fn mul(self, rhs: f64) -> Twist {
        self.scale(rhs)
    }
}

/// Element of SE(3): `x ↦ R·x + p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Mat3::identity(), Vec3::zeros())
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(Mat3::identity(), translation)
    }

    pub fn from_rotation(rotation: Mat3) -> Self {
        Self::new(rotation, Vec3::zeros())
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt * self.translation))
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn to_matrix(&self) -> Mat4 {
        let mut m = Mat4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Reads the rotation and translation blocks; the bottom row is ignored.
    pub fn from_matrix(m: &Mat4) -> Self {
        Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        )
    }

    /// Largest of `‖RᵀR − I‖_F` and `|det R − 1|`.
    pub fn rotation_error(&self) -> f64 {
        let r = &self.rotation;
        let ortho = (r.transpose() * r - Mat3::identity()).norm();
        ortho.max((r.determinant() - 1.0).abs())
    }
}

impl Mul for RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * rhs.rotation,
            self.rotation * rhs.translation + self.translation,
        )
    }
}

impl<'a> Mul<&'a RigidTransform> for &'a RigidTransform {
    type Output = RigidTransform;
    fn mul(self, rhs: &RigidTransform) -> RigidTransform {
        *self * *rhs
    }
}

/// `[v]`, the so(3) matrix with `[v]·w = v × w`.
#[inline]
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// `[S] = [[ω], v; 0, 0]`.
pub fn se3_hat(s: &Twist) -> Mat4 {
    let mut m = Mat4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&s.angular));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&s.linear);
    m
}

fn check_unit_axis(omega: &Vec3) -> Result<(), SpatialError> {
    let norm = omega.norm();
    if (norm - 1.0).abs() > UNIT_AXIS_TOL {
        return Err(SpatialError::NonUnitAxis { norm });
    }
    Ok(())
}

/// Rodrigues: `I + sinθ[ω] + (1 − cosθ)[ω]²` for a unit axis.
pub fn exp_so3(omega: &Vec3, theta: f64) -> Result<Mat3, SpatialError> {
    if theta == 0.0 {
        return Ok(Mat3::identity());
    }
    check_unit_axis(omega)?;
    Ok(exp_so3_unchecked(omega, theta))
}

#[inline]
pub(crate) fn exp_so3_unchecked(omega: &Vec3, theta: f64) -> Mat3 {
    let w = skew(omega);
    let w2 = w * w;
    let half = 0.5 * theta;
    // 1 − cosθ = 2 sin²(θ/2) has no cancellation near zero.
    let one_minus_cos = 2.0 * half.sin() * half.sin();
    Mat3::identity() + w * theta.sin() + w2 * one_minus_cos
}

/// `e^{[S]θ}` in closed form.
///
/// Accepts a unit-angular screw, a unit pure translation (`ω = 0`, `‖v‖ = 1`)
/// or any screw with `θ = 0`.
pub fn exp_se3(s: &Twist, theta: f64) -> Result<RigidTransform, SpatialError> {
    if theta == 0.0 {
        return Ok(RigidTransform::identity());
    }
    let wn = s.angular.norm();
    let vn = s.linear.norm();
    if (wn - 1.0).abs() <= UNIT_AXIS_TOL {
        return Ok(exp_se3_unchecked(s, theta));
    }
    if wn == 0.0 && (vn - 1.0).abs() <= UNIT_AXIS_TOL {
        return Ok(RigidTransform::from_translation(s.linear * theta));
    }
    Err(SpatialError::NonUnitScrew {
        angular: wn,
        linear: vn,
    })
}

/// Closed-form exponential for a screw whose angular part is known to be unit
/// (or exactly zero, giving a translation).
#[inline]
pub(crate) fn exp_se3_unchecked(s: &Twist, theta: f64) -> RigidTransform {
    if s.angular == Vec3::zeros() {
        return RigidTransform::from_translation(s.linear * theta);
    }
    let w = skew(&s.angular);
    let w2 = w * w;
    let half = 0.5 * theta;
    let sin = theta.sin();
    let one_minus_cos = 2.0 * half.sin() * half.sin();
    let theta_minus_sin = if theta.abs() < SMALL_ANGLE {
        theta * theta * theta / 6.0
    } else {
        theta - sin
    };
    let rotation = Mat3::identity() + w * sin + w2 * one_minus_cos;
    let g = Mat3::identity() * theta + w * one_minus_cos + w2 * theta_minus_sin;
    RigidTransform::new(rotation, g * s.linear)
}

/// `Ad_T = [[R, 0], [[p]R, R]]` acting on angular-first twists.
pub fn adjoint(t: &RigidTransform) -> Mat6 {
    let r = &t.rotation;
    let pr = skew(&t.translation) * r;
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&pr);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(r);
    m
}

/// `Ad_T·V` without forming the 6×6 matrix.
#[inline]
pub fn adjoint_apply(t: &RigidTransform, v: &Twist) -> Twist {
    let w = t.rotation * v.angular;
    Twist::new(w, t.translation.cross(&w) + t.rotation * v.linear)
}

/// `Ad_Tᵀ·F` for an angular-first wrench `F`.
#[inline]
pub fn adjoint_transpose_apply(t: &RigidTransform, f: &Twist) -> Twist {
    let rt = t.rotation.transpose();
    // [[Rᵀ, −Rᵀ[p]], [0, Rᵀ]]
    Twist::new(
        rt * (f.angular - t.translation.cross(&f.linear)),
        rt * f.linear,
    )
}

/// The full Lie-bracket operator `ad_V = [[ω], 0; [v], [ω]]`, so that
/// `ad_V·W = [V, W]`.
pub fn ad(v: &Twist) -> Mat6 {
    let w = skew(&v.angular);
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&skew(&v.linear));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m
}

/// `[A, B] = ad_A·B`.
#[inline]
pub fn bracket(a: &Twist, b: &Twist) -> Twist {
    Twist::new(
        a.angular.cross(&b.angular),
        a.angular.cross(&b.linear) + a.linear.cross(&b.angular),
    )
}

/// `ad_Vᵀ·F`.
#[inline]
pub fn ad_transpose_apply(v: &Twist, f: &Twist) -> Twist {
    Twist::new(
        -(v.angular.cross(&f.angular) + v.linear.cross(&f.linear)),
        -v.angular.cross(&f.linear),
    )
}

/// Block operator `[[−[ω], 0], [0, −[ω]]]` built from the angular part of `V`.
///
/// Only the angular part enters; this equals `−ad_V` when `V` has no linear
/// part, which holds for every revolute body screw scaled by a joint rate.
pub fn ad_small(v: &Twist) -> Mat6 {
    let w = -skew(&v.angular);
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m
}

/// Dual operator `[[−[ω], −[v]], [0, −[ω]]]`, equal to `ad_Vᵀ`.
pub fn ad_dual(v: &Twist) -> Mat6 {
    let w = -skew(&v.angular);
    let mut m = Mat6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-skew(&v.linear)));
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m
}
