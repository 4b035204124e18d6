//! Free-floating end-effector: a 6-DoF point mass with isotropic inertia.
//! Gravity is taken as compensated.

use serde::{Deserialize, Serialize};

use crate::controller::Wrench;
use crate::pose::{integrate_pose, Pose, Twist};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub mass: f64,
    pub inertia: f64,
    /// Hard twist caps, m/s and rad/s.
    pub max_linear: f64,
    pub max_angular: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self { mass: 1.0, inertia: 0.1, max_linear: 2.0, max_angular: 4.0 }
    }
}

impl PlantConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !(pos(self.mass) && pos(self.inertia)) {
            return Err("mass and inertia must be positive");
        }
        if !(pos(self.max_linear) && pos(self.max_angular)) {
            return Err("twist caps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    pub pose: Pose,
    pub twist: Twist,
}

/// One semi-implicit Euler step: the twist is updated from the summed
/// wrench first, clamped to the hard caps, then integrated into the pose.
pub fn step_control(plant: &PlantState, command: &Wrench, human: &Wrench, dt: f64, cfg: &PlantConfig) -> PlantState {
    let force = command.force + human.force;
    let torque = command.torque + human.torque;
    let twist = Twist::new(plant.twist.linear + force / cfg.mass * dt, plant.twist.angular + torque / cfg.inertia * dt)
        .clamped(cfg.max_linear, cfg.max_angular);
    PlantState { pose: integrate_pose(&plant.pose, &twist, dt), twist }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::CONTROL_DT;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    #[test]
    fn at_rest_stays_put() {
        let s = PlantState { pose: Pose::from_position(Vector3::new(0.1, 0.2, 0.3)), twist: Twist::zero() };
        let n = step_control(&s, &Wrench::zero(), &Wrench::zero(), CONTROL_DT, &PlantConfig::default());
        assert_eq!(n, s);
    }

    #[test]
    fn constant_force_kinematics() {
        let cfg = PlantConfig::default();
        let f = Wrench::new(Vector3::new(1.0, 0.0, 0.0), Vector3::zeros());
        let mut s = PlantState::default();
        for _ in 0..200 {
            s = step_control(&s, &f, &Wrench::zero(), CONTROL_DT, &cfg);
        }
        // v = F t / m, x = F t² / 2m
        assert!((s.twist.linear.x - 1.0).abs() < 0.02);
        assert!((s.pose.position.x - 0.5).abs() < 0.5 * 0.02);
    }

    #[test]
    fn opposing_wrenches_cancel() {
        let cfg = PlantConfig::default();
        let s = PlantState {
            pose: Pose::identity(),
            twist: Twist::new(Vector3::new(0.3, 0.0, 0.0), Vector3::new(0.0, 0.0, 0.5)),
        };
        let w = Wrench::new(Vector3::new(4.0, -2.0, 1.0), Vector3::new(0.1, 0.2, -0.3));
        let minus = Wrench::new(-w.force, -w.torque);
        let n = step_control(&s, &w, &minus, CONTROL_DT, &cfg);
        assert_eq!(n.twist, s.twist);
    }

    proptest! {
        #[test]
        fn never_exceeds_caps(f in prop::array::uniform3(-1e3f64..1e3), t in prop::array::uniform3(-1e3f64..1e3)) {
            let cfg = PlantConfig::default();
            let mut s = PlantState::default();
            let w = Wrench::new(Vector3::from(f), Vector3::from(t));
            for _ in 0..20 {
                let next = step_control(&s, &w, &Wrench::zero(), CONTROL_DT, &cfg);
                prop_assert!(next.twist.linear.norm() <= cfg.max_linear + 1e-12);
                prop_assert!(next.twist.angular.norm() <= cfg.max_angular + 1e-12);
                prop_assert!((next.pose.position - s.pose.position).norm() <= cfg.max_linear * CONTROL_DT + 1e-12);
                s = next;
            }
        }
    }
}
