//! Linear first-order dynamical-system (DS) actions.
//!
//! A DS action drives the end-effector toward an attractor pose with a
//! diagonal, negative-definite dynamics matrix: `ẋᵈ = A · d(x, x*)`. The
//! Cartesian and rotational blocks are decoupled, and each block's output is
//! norm-clamped to a speed cap.

use nalgebra::{Vector3, Vector6};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{pose_difference, Pose, Twist};

#[derive(Debug, Error, PartialEq)]
pub enum DsError {
    #[error("dynamics entry {index} is {value}, must be strictly negative")]
    NotNegativeDefinite { index: usize, value: f64 },
    #[error("invalid range [{lo}, {hi}]: bounds must be negative and ordered")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("workspace min corner must be below max corner on every axis")]
    InvalidBounds,
}

/// Per-block speed limits applied to the reference velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedCap {
    /// m/s
    pub linear: f64,
    /// rad/s
    pub angular: f64,
}

impl Default for SpeedCap {
    fn default() -> Self {
        Self { linear: 0.5, angular: 1.5 }
    }
}

/// Closed interval `[lo, hi]` for one block of dynamics entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }
}

/// Sampling ranges for the diagonal dynamics entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRanges {
    pub cartesian: Range,
    pub rotational: Range,
}

impl Default for DynamicsRanges {
    fn default() -> Self {
        Self { cartesian: Range::new(-0.6, -0.4), rotational: Range::new(-0.9, -0.6) }
    }
}

impl DynamicsRanges {
    pub fn validate(&self) -> Result<(), DsError> {
        for r in [self.cartesian, self.rotational] {
            if !(r.lo <= r.hi && r.hi < 0.0) {
                return Err(DsError::InvalidRange { lo: r.lo, hi: r.hi });
            }
        }
        Ok(())
    }

    /// Dynamics vector at the midpoint of both ranges.
    pub fn midpoint(&self) -> Dynamics {
        let c = self.cartesian.midpoint();
        let r = self.rotational.midpoint();
        Dynamics(Vector6::new(c, c, c, r, r, r))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Dynamics {
        let mut v = Vector6::zeros();
        for i in 0..3 {
            v[i] = self.cartesian.sample(rng);
        }
        for i in 3..6 {
            v[i] = self.rotational.sample(rng);
        }
        Dynamics(v)
    }

    /// Clamps each entry into its block's range.
    pub fn clamp(&self, d: &Dynamics) -> Dynamics {
        let mut v = d.0;
        for i in 0..3 {
            v[i] = self.cartesian.clamp(v[i]);
        }
        for i in 3..6 {
            v[i] = self.rotational.clamp(v[i]);
        }
        Dynamics(v)
    }
}

/// Diagonal of the dynamics matrix `A`: three Cartesian then three rotational
/// entries, 1/s, all strictly negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dynamics(pub Vector6<f64>);

impl Dynamics {
    pub fn uniform(cartesian: f64, rotational: f64) -> Self {
        Self(Vector6::new(cartesian, cartesian, cartesian, rotational, rotational, rotational))
    }

    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail
    pub fn validate(&self) -> Result<(), DsError> {
        match self.0.iter().position(|v| !(*v < 0.0)) {
            Some(index) => Err(DsError::NotNegativeDefinite { index, value: self.0[index] }),
            None => Ok(()),
        }
    }

    pub fn cartesian(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn rotational(&self) -> Vector3<f64> {
        self.0.fixed_rows::<3>(3).into_owned()
    }
}

/// A DS action: attractor pose plus diagonal dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DsAction {
    pub attractor: Pose,
    pub dynamics: Dynamics,
    #[serde(default)]
    pub speed_cap: SpeedCap,
    /// Co-carry entries run with softened gains.
    #[serde(default)]
    pub compliant: bool,
}

impl DsAction {
    pub fn new(attractor: Pose, dynamics: Dynamics) -> Result<Self, DsError> {
        dynamics.validate()?;
        Ok(Self { attractor, dynamics, speed_cap: SpeedCap::default(), compliant: false })
    }

    /// Action at `attractor` with the midpoint of the default ranges.
    pub fn at(attractor: Pose) -> Self {
        Self {
            attractor,
            dynamics: DynamicsRanges::default().midpoint(),
            speed_cap: SpeedCap::default(),
            compliant: false,
        }
    }

    pub fn with_speed_cap(mut self, cap: SpeedCap) -> Self {
        self.speed_cap = cap;
        self
    }

    /// Reference twist `A · d(x, x*)`, each block clamped to the speed cap.
    pub fn reference_velocity(&self, x: &Pose) -> Twist {
        self.unclamped_velocity(x).clamped(self.speed_cap.linear, self.speed_cap.angular)
    }

    pub fn unclamped_velocity(&self, x: &Pose) -> Twist {
        let d = pose_difference(x, &self.attractor);
        Twist::from_vector(&self.dynamics.0.component_mul(&d))
    }
}

/// Axis-aligned box attractors and start poses are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl WorkspaceBounds {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Result<Self, DsError> {
        if (0..3).all(|i| min[i] < max[i]) {
            Ok(Self { min, max })
        } else {
            Err(DsError::InvalidBounds)
        }
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn sample_position<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector3<f64> {
        Vector3::from_fn(|i, _| rng.random_range(self.min[i]..self.max[i]))
    }
}

/// Action anchored exactly at `object_attractor` with dynamics drawn
/// uniformly from `ranges`.
pub fn sample_uniform_action<R: Rng + ?Sized>(
    object_attractor: &Pose,
    rng: &mut R,
    ranges: &DynamicsRanges,
) -> DsAction {
    DsAction {
        attractor: *object_attractor,
        dynamics: ranges.sample(rng),
        speed_cap: SpeedCap::default(),
        compliant: false,
    }
}
