//! Confidence measure and the confidence-scaled damping controller.
//!
//! Confidence is one minus the normalized tracking-error integral over a
//! sliding window, clipped to `[0, 1]`. Drops apply immediately; recovery is
//! rate limited by a per-block ascent rate. The wrench law is damping only:
//! `u = −max(c·D_high, D_low) · (ẋ − ẋᵈ)`, per block.

use std::collections::VecDeque;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::{clamp_norm, Twist};

/// Control loop period at 200 Hz.
pub const CONTROL_DT: f64 = 1.0 / 200.0;

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error("controller config: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WrenchCap {
    /// N
    pub force: f64,
    /// N·m
    pub torque: f64,
}

impl Default for WrenchCap {
    fn default() -> Self {
        Self { force: 60.0, torque: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// N·s/m
    pub d_lin_high: f64,
    pub d_lin_low: f64,
    /// N·m·s/rad
    pub d_rot_high: f64,
    pub d_rot_low: f64,
    /// Error integration window, seconds.
    pub window: f64,
    /// Integrated linear error (m) that drives confidence to zero.
    pub error_scale_lin: f64,
    /// Integrated angular error (rad) that drives confidence to zero.
    pub error_scale_rot: f64,
    /// 1/s
    pub ascent_rate_lin: f64,
    pub ascent_rate_rot: f64,
    pub wrench_cap: WrenchCap,
    /// Confidence used for gains while co-carrying is capped here.
    pub compliant_confidence: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            d_lin_high: 85.0,
            d_lin_low: 1.0,
            d_rot_high: 13.0,
            d_rot_low: 1.0,
            window: 0.5,
            error_scale_lin: 0.15,
            error_scale_rot: 0.4,
            ascent_rate_lin: 0.41,
            ascent_rate_rot: 0.49,
            wrench_cap: WrenchCap::default(),
            compliant_confidence: 0.2,
        }
    }
}

impl ControllerConfig {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail
    pub fn validate(&self) -> Result<(), ControllerError> {
        if !(self.d_lin_high >= self.d_lin_low && self.d_lin_low > 0.0) {
            return Err(ControllerError::Invalid("need d_lin_high >= d_lin_low > 0"));
        }
        if !(self.d_rot_high >= self.d_rot_low && self.d_rot_low > 0.0) {
            return Err(ControllerError::Invalid("need d_rot_high >= d_rot_low > 0"));
        }
        if !(self.window > 0.0) {
            return Err(ControllerError::Invalid("window must be positive"));
        }
        if !(self.error_scale_lin > 0.0 && self.error_scale_rot > 0.0) {
            return Err(ControllerError::Invalid("error scales must be positive"));
        }
        if !(self.ascent_rate_lin > 0.0 && self.ascent_rate_rot > 0.0) {
            return Err(ControllerError::Invalid("ascent rates must be positive"));
        }
        if !(self.wrench_cap.force > 0.0 && self.wrench_cap.torque > 0.0) {
            return Err(ControllerError::Invalid("wrench caps must be positive"));
        }
        if !(0.0..=1.0).contains(&self.compliant_confidence) {
            return Err(ControllerError::Invalid("compliant_confidence must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Effective linear damping gain at confidence `c`.
    pub fn linear_gain(&self, c: f64) -> f64 {
        (c * self.d_lin_high).max(self.d_lin_low)
    }

    pub fn angular_gain(&self, c: f64) -> f64 {
        (c * self.d_rot_high).max(self.d_rot_low)
    }
}

/// Cartesian wrench.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub torque: Vector3<f64>,
}

impl Wrench {
    pub fn new(force: Vector3<f64>, torque: Vector3<f64>) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.force.norm() == 0.0 && self.torque.norm() == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }

    pub fn clamped(&self, force: f64, torque: f64) -> Self {
        Self::new(clamp_norm(self.force, force), clamp_norm(self.torque, torque))
    }
}

impl std::ops::Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench::new(self.force + rhs.force, self.torque + rhs.torque)
    }
}

/// Per-block confidence with its tracking-error window.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceState {
    pub c_lin: f64,
    pub c_rot: f64,
    window: VecDeque<(f64, f64)>,
    capacity: usize,
}

impl ConfidenceState {
    /// Fully confident state with a zero-error window of `⌈T / dt⌉` samples.
    pub fn new(cfg: &ControllerConfig, dt: f64) -> Self {
        let capacity = window_len(cfg.window, dt);
        Self { c_lin: 1.0, c_rot: 1.0, window: std::iter::repeat_n((0.0, 0.0), capacity).collect(), capacity }
    }

    pub fn with_confidence(mut self, c_lin: f64, c_rot: f64) -> Self {
        self.c_lin = c_lin.clamp(0.0, 1.0);
        self.c_rot = c_rot.clamp(0.0, 1.0);
        self
    }

    /// Scalar confidence, the smaller of the two blocks.
    pub fn scalar(&self) -> f64 {
        self.c_lin.min(self.c_rot)
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    /// Integrated (linear, angular) error over the window.
    pub fn integrated_error(&self, dt: f64) -> (f64, f64) {
        self.window.iter().fold((0.0, 0.0), |(l, r), (el, er)| (l + el * dt, r + er * dt))
    }

    pub fn update(&mut self, twist: &Twist, reference: &Twist, dt: f64, cfg: &ControllerConfig) {
        let err = *twist - *reference;
        let sample = (finite_or_max(err.linear.norm()), finite_or_max(err.angular.norm()));
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(sample);

        let (e_lin, e_rot) = self.integrated_error(dt);
        let raw_lin = (1.0 - e_lin / cfg.error_scale_lin).clamp(0.0, 1.0);
        let raw_rot = (1.0 - e_rot / cfg.error_scale_rot).clamp(0.0, 1.0);
        self.c_lin = rate_limited(self.c_lin, raw_lin, cfg.ascent_rate_lin * dt);
        self.c_rot = rate_limited(self.c_rot, raw_rot, cfg.ascent_rate_rot * dt);
    }
}

fn finite_or_max(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::MAX
    }
}

fn window_len(window: f64, dt: f64) -> usize {
    // guard against ⌈0.5/0.005⌉ landing on 101 through rounding noise
    let ratio = window / dt;
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() < 1e-9 { nearest } else { ratio.ceil() };
    (n as usize).max(1)
}

fn rate_limited(current: f64, target: f64, max_step: f64) -> f64 {
    if target < current {
        target
    } else {
        target.min(current + max_step)
    }
}

/// Functional form of [`ConfidenceState::update`].
pub fn update_confidence(
    state: &ConfidenceState,
    twist: &Twist,
    reference: &Twist,
    dt: f64,
    cfg: &ControllerConfig,
) -> ConfidenceState {
    let mut next = state.clone();
    next.update(twist, reference, dt, cfg);
    next
}

/// Damping-only wrench scaled by confidence, each block clamped.
pub fn control_wrench(c_lin: f64, c_rot: f64, twist: &Twist, reference: &Twist, cfg: &ControllerConfig) -> Wrench {
    let err = *twist - *reference;
    let force = err.linear * -cfg.linear_gain(c_lin);
    let torque = err.angular * -cfg.angular_gain(c_rot);
    Wrench::new(force, torque).clamped(cfg.wrench_cap.force, cfg.wrench_cap.torque)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn twist(v: [f64; 3], w: [f64; 3]) -> Twist {
        Twist::new(Vector3::from(v), Vector3::from(w))
    }

    #[test]
    fn window_length_is_exact() {
        let cfg = ControllerConfig::default();
        assert_eq!(ConfidenceState::new(&cfg, CONTROL_DT).window_len(), 100);
        let cfg = ControllerConfig { window: 0.503, ..cfg };
        assert_eq!(ConfidenceState::new(&cfg, CONTROL_DT).window_len(), 101);
    }

    #[test]
    fn perfect_tracking_keeps_full_confidence() {
        let cfg = ControllerConfig::default();
        let mut s = ConfidenceState::new(&cfg, CONTROL_DT);
        let t = twist([0.1, 0.0, 0.0], [0.0, 0.2, 0.0]);
        for _ in 0..400 {
            s.update(&t, &t, CONTROL_DT, &cfg);
            assert_eq!((s.c_lin, s.c_rot), (1.0, 1.0));
        }
    }

    #[test]
    fn sustained_error_floors_confidence() {
        let cfg = ControllerConfig::default();
        let mut s = ConfidenceState::new(&cfg, CONTROL_DT);
        let reference = Twist::zero();
        let t = twist([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]);
        for _ in 0..100 {
            s.update(&t, &reference, CONTROL_DT, &cfg);
        }
        assert_eq!(s.c_lin, 0.0);
        assert!(s.c_rot < 1.0);
    }

    #[test]
    fn single_large_error_drops_immediately() {
        let cfg = ControllerConfig::default();
        let mut s = ConfidenceState::new(&cfg, CONTROL_DT);
        let t = twist([cfg.error_scale_lin / CONTROL_DT, 0.0, 0.0], [0.0; 3]);
        s.update(&t, &Twist::zero(), CONTROL_DT, &cfg);
        assert_eq!(s.c_lin, 0.0);
        assert_eq!(s.c_rot, 1.0);
    }

    #[test]
    fn gains_follow_schedule() {
        let cfg = ControllerConfig::default();
        let dv = twist([0.1, 0.0, 0.0], [0.0; 3]);
        let w = control_wrench(1.0, 1.0, &dv, &Twist::zero(), &cfg);
        assert!((w.force - Vector3::new(-8.5, 0.0, 0.0)).norm() < 1e-12);
        let w = control_wrench(0.0, 0.0, &dv, &Twist::zero(), &cfg);
        assert!((w.force - Vector3::new(-0.1, 0.0, 0.0)).norm() < 1e-12);
        let same = control_wrench(0.3, 0.7, &dv, &dv, &cfg);
        assert!(same.is_zero());
    }

    #[test]
    fn wrench_is_capped() {
        let cfg = ControllerConfig::default();
        let w = control_wrench(1.0, 1.0, &twist([10.0, 0.0, 0.0], [0.0, 0.0, 10.0]), &Twist::zero(), &cfg);
        assert!((w.force.norm() - 60.0).abs() < 1e-9);
        assert!((w.torque.norm() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = ControllerConfig { d_lin_low: 100.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = ControllerConfig { ascent_rate_rot: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(ControllerConfig::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn confidence_stays_in_unit_interval(errs in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 1..300)) {
            let cfg = ControllerConfig::default();
            let mut s = ConfidenceState::new(&cfg, CONTROL_DT);
            for (a, b) in errs {
                s.update(&twist([a, 0.0, 0.0], [0.0, b, 0.0]), &Twist::zero(), CONTROL_DT, &cfg);
                prop_assert!((0.0..=1.0).contains(&s.c_lin));
                prop_assert!((0.0..=1.0).contains(&s.c_rot));
            }
        }

        #[test]
        fn gain_monotone_and_bounded(c1 in 0.0..1.0f64, c2 in 0.0..1.0f64) {
            let cfg = ControllerConfig::default();
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            prop_assert!(cfg.linear_gain(lo) <= cfg.linear_gain(hi));
            prop_assert!(cfg.angular_gain(lo) <= cfg.angular_gain(hi));
            prop_assert!((cfg.d_lin_low..=cfg.d_lin_high).contains(&cfg.linear_gain(c1)));
            prop_assert!((cfg.d_rot_low..=cfg.d_rot_high).contains(&cfg.angular_gain(c1)));
        }
    }
}
