//! Human stand-ins: scripted wrenches, a virtual human pulling the
//! end-effector toward a target, hand paths for intent estimation, and a
//! hold schedule.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::controller::Wrench;
use crate::pose::{clamp_norm, Twist};
use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanMode {
    /// No human wrench at all.
    None,
    /// Wrenches come from the schedules below, plus any client wrench.
    #[default]
    Scripted,
    /// Wrenches come from connected clients.
    Interactive,
}

/// Constant wrench over `[start, start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WrenchSegment {
    pub start: f64,
    pub duration: f64,
    #[serde(default)]
    pub force: [f64; 3],
    #[serde(default)]
    pub torque: [f64; 3],
}

/// Spring-damper pull toward an object-relative target:
/// `F = clamp(k (p_target − p) − b v, F_max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PullSegment {
    pub start: f64,
    pub duration: f64,
    pub target_object: String,
    #[serde(default)]
    pub target_offset: [f64; 3],
    #[serde(default = "default_stiffness")]
    pub stiffness: f64,
    #[serde(default = "default_damping")]
    pub damping: f64,
    #[serde(default = "default_max_force")]
    pub max_force: f64,
}

fn default_stiffness() -> f64 {
    50.0
}
fn default_damping() -> f64 {
    15.0
}
fn default_max_force() -> f64 {
    20.0
}

/// Straight-line hand motion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandSegment {
    pub start: f64,
    pub duration: f64,
    pub from: [f64; 3],
    pub to: [f64; 3],
}

/// At `at` the human takes `object`, or lets go when it is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldEvent {
    pub at: f64,
    #[serde(default)]
    pub object: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumanSpec {
    pub mode: HumanMode,
    pub wrench: Vec<WrenchSegment>,
    pub pull: Vec<PullSegment>,
    pub hand: Vec<HandSegment>,
    pub hold: Vec<HoldEvent>,
    /// Per-client force cap for interactive input, N.
    pub max_force: Option<f64>,
    /// Per-client torque cap for interactive input, N·m.
    pub max_torque: Option<f64>,
}

fn active(start: f64, duration: f64, t: f64) -> bool {
    t >= start && t < start + duration
}

impl HumanSpec {
    pub fn force_cap(&self) -> f64 {
        self.max_force.unwrap_or(20.0)
    }

    pub fn torque_cap(&self) -> f64 {
        self.max_torque.unwrap_or(5.0)
    }

    /// Checks schedule sanity; returns a field path and message on error.
    pub fn validate(&self, scene: &Scene) -> Result<(), (String, String)> {
        let mut windows: Vec<(f64, f64, String)> = Vec::new();
        for (i, w) in self.wrench.iter().enumerate() {
            windows.push((w.start, w.duration, format!("human.wrench[{i}]")));
        }
        for (i, p) in self.pull.iter().enumerate() {
            windows.push((p.start, p.duration, format!("human.pull[{i}]")));
            if scene.get(&p.target_object).is_none() {
                return Err((
                    format!("human.pull[{i}].target_object"),
                    format!("unknown object '{}'", p.target_object),
                ));
            }
            if !(p.stiffness >= 0.0 && p.damping >= 0.0 && p.max_force > 0.0) {
                return Err((format!("human.pull[{i}]"), "gains must be >= 0 and max_force > 0".into()));
            }
        }
        check_windows(windows)?;
        check_windows(
            self.hand.iter().enumerate().map(|(i, h)| (h.start, h.duration, format!("human.hand[{i}]"))).collect(),
        )?;
        for (i, h) in self.hold.iter().enumerate() {
            if !(h.at.is_finite() && h.at >= 0.0) {
                return Err((format!("human.hold[{i}].at"), "must be finite and >= 0".into()));
            }
            if let Some(o) = &h.object {
                if scene.get(o).is_none() {
                    return Err((format!("human.hold[{i}].object"), format!("unknown object '{o}'")));
                }
            }
        }
        if self.hold.windows(2).any(|w| w[1].at < w[0].at) {
            return Err(("human.hold".into(), "events must be in time order".into()));
        }
        for (name, cap) in [("human.max_force", self.max_force), ("human.max_torque", self.max_torque)] {
            if cap.is_some_and(|c| !(c.is_finite() && c > 0.0)) {
                return Err((name.into(), "must be positive".into()));
            }
        }
        Ok(())
    }

    /// Scripted wrench at time `t` for an end-effector at `p` moving at `twist`.
    pub fn scripted_wrench(&self, t: f64, p: &Vector3<f64>, twist: &Twist, scene: &Scene) -> Wrench {
        if self.mode != HumanMode::Scripted {
            return Wrench::zero();
        }
        let mut w = Wrench::zero();
        for s in self.wrench.iter().filter(|s| active(s.start, s.duration, t)) {
            w = w + Wrench::new(Vector3::from(s.force), Vector3::from(s.torque));
        }
        for s in self.pull.iter().filter(|s| active(s.start, s.duration, t)) {
            let Some(obj) = scene.get(&s.target_object) else { continue };
            let target = obj.pose.position + Vector3::from(s.target_offset);
            let f = (target - p) * s.stiffness - twist.linear * s.damping;
            w = w + Wrench::new(clamp_norm(f, s.max_force), Vector3::zeros());
        }
        w
    }

    /// Hand position and velocity at `t`; `None` without a hand path.
    pub fn hand(&self, t: f64) -> Option<(Vector3<f64>, Vector3<f64>)> {
        let mut last: Option<&HandSegment> = None;
        for h in &self.hand {
            if active(h.start, h.duration, t) {
                let (a, b) = (Vector3::from(h.from), Vector3::from(h.to));
                let s = (t - h.start) / h.duration;
                return Some((a + (b - a) * s, (b - a) / h.duration));
            }
            if h.start + h.duration <= t && last.is_none_or(|l| l.start < h.start) {
                last = Some(h);
            }
        }
        match last {
            Some(h) => Some((Vector3::from(h.to), Vector3::zeros())),
            None => self.hand.first().map(|h| (Vector3::from(h.from), Vector3::zeros())),
        }
    }

    /// Hold events falling in `(t0, t1]`.
    pub fn holds_between(&self, t0: f64, t1: f64) -> impl Iterator<Item = &HoldEvent> {
        self.hold.iter().filter(move |h| h.at > t0 && h.at <= t1)
    }
}

fn check_windows(mut w: Vec<(f64, f64, String)>) -> Result<(), (String, String)> {
    for (s, d, name) in &w {
        if !(s.is_finite() && *s >= 0.0 && d.is_finite() && *d > 0.0) {
            return Err((name.clone(), "start must be >= 0 and duration > 0".into()));
        }
    }
    w.sort_by(|a, b| a.0.total_cmp(&b.0));
    for pair in w.windows(2) {
        if pair[1].0 < pair[0].0 + pair[0].1 {
            return Err((pair[1].2.clone(), format!("overlaps {}", pair[0].2)));
        }
    }
    Ok(())
}
