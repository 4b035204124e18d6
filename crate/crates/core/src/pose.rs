//! End-effector pose and twist types, and the pose difference used by every
//! dynamical-system action.
//!
//! Orientations are unit quaternions stored as `(w, x, y, z)` with a
//! non-negative scalar part. Rotation vectors (axis times angle) are the
//! tangent representation used for angular velocities and differences.

use std::f64::consts::PI;

use nalgebra::{Quaternion, Unit, UnitQuaternion, Vector3, Vector6};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Relative rotations are clamped below π by this margin before taking the
/// logarithm, so the rotation axis stays well defined.
pub const PI_CLAMP_MARGIN: f64 = 1e-6;

/// End-effector pose: position in meters, orientation as a unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, orientation: canonical(orientation) }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_position(position: Vector3<f64>) -> Self {
        Self::new(position, UnitQuaternion::identity())
    }

    /// Builds a pose from a position and a `(w, x, y, z)` quaternion, which is
    /// normalized. Returns `None` for a zero or non-finite quaternion.
    pub fn from_wxyz(position: [f64; 3], wxyz: [f64; 4]) -> Option<Self> {
        let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 || position.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Self::new(Vector3::from(position), UnitQuaternion::new_unchecked(q)))
    }

    pub fn orientation(&self) -> &UnitQuaternion<f64> {
        &self.orientation
    }

    pub fn set_orientation(&mut self, orientation: UnitQuaternion<f64>) {
        self.orientation = canonical(orientation);
    }

    /// Orientation as `[w, x, y, z]`.
    pub fn wxyz(&self) -> [f64; 4] {
        let q = self.orientation.quaternion();
        [q.w, q.i, q.j, q.k]
    }

    /// Same pose translated by `offset` (world frame).
    pub fn translated(&self, offset: Vector3<f64>) -> Self {
        Self::new(self.position + offset, self.orientation)
    }

    /// Position followed by `w, x, y, z`.
    pub fn to_array(&self) -> [f64; 7] {
        let q = self.wxyz();
        [self.position.x, self.position.y, self.position.z, q[0], q[1], q[2], q[3]]
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    position: [f64; 3],
    orientation: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PoseRepr { position: self.position.into(), orientation: self.wxyz() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(deserializer)?;
        Pose::from_wxyz(repr.position, repr.orientation)
            .ok_or_else(|| serde::de::Error::custom("pose needs a finite, non-zero quaternion"))
    }
}

/// Linear (m/s) and angular (rad/s, world-frame rotation-vector rate) velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Twist {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl Twist {
    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self { linear, angular }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self { linear: v.fixed_rows::<3>(0).into_owned(), angular: v.fixed_rows::<3>(3).into_owned() }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.linear.x, self.linear.y, self.linear.z, self.angular.x, self.angular.y, self.angular.z)
    }

    pub fn is_finite(&self) -> bool {
        self.linear.iter().chain(self.angular.iter()).all(|v| v.is_finite())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.linear * k, self.angular * k)
    }

    /// Clamps each block's norm, preserving direction.
    pub fn clamped(&self, max_linear: f64, max_angular: f64) -> Self {
        Self::new(clamp_norm(self.linear, max_linear), clamp_norm(self.angular, max_angular))
    }
}

impl std::ops::Sub for Twist {
    type Output = Twist;
    fn sub(self, rhs: Twist) -> Twist {
        Twist::new(self.linear - rhs.linear, self.angular - rhs.angular)
    }
}

impl std::ops::Add for Twist {
    type Output = Twist;
    fn add(self, rhs: Twist) -> Twist {
        Twist::new(self.linear + rhs.linear, self.angular + rhs.angular)
    }
}

/// Scales `v` down to `max` norm if it exceeds it.
pub fn clamp_norm(v: Vector3<f64>, max: f64) -> Vector3<f64> {
    let n = v.norm();
    if n > max && n > 0.0 {
        v * (max / n)
    } else {
        v
    }
}

fn canonical(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let mut raw = *q.quaternion();
    if raw.w < 0.0 {
        raw = -raw;
    }
    // renormalizing an already-unit quaternion can move the last bit
    if (raw.norm() - 1.0).abs() < 1e-12 {
        UnitQuaternion::new_unchecked(raw)
    } else {
        UnitQuaternion::new_normalize(raw)
    }
}

/// Rotation vector of `q` along the shortest path, angle in `[0, π)`.
pub fn log_map(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let raw = q.quaternion();
    let (w, v) = if raw.w < 0.0 { (-raw.w, -raw.imag()) } else { (raw.w, raw.imag()) };
    let sin_half = v.norm();
    if sin_half < 1e-12 {
        // first-order expansion around identity
        return v * 2.0;
    }
    let angle = (2.0 * sin_half.atan2(w)).min(PI - PI_CLAMP_MARGIN);
    v * (angle / sin_half)
}

/// Unit quaternion for the rotation vector `r`.
pub fn exp_map(r: &Vector3<f64>) -> UnitQuaternion<f64> {
    let angle = r.norm();
    if angle < 1e-12 {
        let q = Quaternion::new(1.0, r.x * 0.5, r.y * 0.5, r.z * 0.5);
        return UnitQuaternion::new_normalize(q);
    }
    let axis = Unit::new_unchecked(r / angle);
    UnitQuaternion::from_axis_angle(&axis, angle)
}

/// Shortest-path angle between two orientations, in `[0, π]`.
pub fn rotation_angle(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let rel = b.quaternion() * a.quaternion().conjugate();
    2.0 * rel.imag().norm().atan2(rel.w.abs())
}

/// State-minus-goal difference `[p − p*; log(q ⊗ q*⁻¹)]`.
///
/// With this sign convention a negative-definite diagonal gain drives `x`
/// toward `goal`.
pub fn pose_difference(x: &Pose, goal: &Pose) -> Vector6<f64> {
    let dp = x.position - goal.position;
    let rel = x.orientation * goal.orientation.inverse();
    let dr = log_map(&rel);
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

/// Advances `x` by `twist` over `dt` seconds; angular velocity is world-frame.
pub fn integrate_pose(x: &Pose, twist: &Twist, dt: f64) -> Pose {
    let position = x.position + twist.linear * dt;
    let orientation = exp_map(&(twist.angular * dt)) * x.orientation;
    Pose::new(position, orientation)
}
