//! Which object is the human's hand heading for?
//!
//! A discrete filter over scene object ids: each candidate is weighted by how
//! well the hand velocity points at it and how close it is. The posterior
//! mode is reported once it is confident, the hand is moving, and the mode
//! has persisted for the hysteresis interval.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::scene::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ApproachConfig {
    /// Hand speed below which nobody is approaching anything, m/s.
    pub min_speed: f64,
    /// Posterior mass the mode needs before it is reported.
    pub min_mass: f64,
    /// Seconds a new mode must persist before the answer switches.
    pub hysteresis: f64,
    /// Bearing error scale, radians.
    pub angle_sigma: f64,
    /// Distance scale, meters.
    pub distance_sigma: f64,
    /// Fraction of the previous belief carried into each update; the rest
    /// is spread uniformly so the filter can change its mind.
    pub retention: f64,
}

impl Default for ApproachConfig {
    fn default() -> Self {
        Self { min_speed: 0.05, min_mass: 0.6, hysteresis: 0.3, angle_sigma: 0.5, distance_sigma: 1.0, retention: 0.9 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ApproachTracker {
    ids: Vec<String>,
    belief: Vec<f64>,
    answer: Option<String>,
    candidate: Option<(String, f64)>,
    time: f64,
}

impl ApproachTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn answer(&self) -> Option<&str> {
        self.answer.as_deref()
    }

    /// Posterior over object ids, in scene order.
    pub fn posterior(&self) -> impl Iterator<Item = (&str, f64)> {
        self.ids.iter().map(String::as_str).zip(self.belief.iter().copied())
    }

    /// Feeds one hand observation taken `dt` seconds after the previous one.
    pub fn update(
        &mut self,
        hand: &Vector3<f64>,
        hand_velocity: &Vector3<f64>,
        scene: &Scene,
        dt: f64,
        cfg: &ApproachConfig,
    ) -> Option<&str> {
        self.time += dt;
        self.sync_candidates(scene);

        let speed = hand_velocity.norm();
        if speed <= cfg.min_speed {
            self.answer = None;
            self.candidate = None;
            return None;
        }

        let k = self.ids.len() as f64;
        let mut total = 0.0;
        for (i, o) in scene.objects().iter().enumerate() {
            let to = o.pose.position - hand;
            let dist = to.norm();
            let angle =
                if dist < 1e-9 { 0.0 } else { (hand_velocity.dot(&to) / (speed * dist)).clamp(-1.0, 1.0).acos() };
            let likelihood = (-(angle / cfg.angle_sigma).powi(2)).exp() * (-(dist / cfg.distance_sigma).powi(2)).exp();
            let prior = cfg.retention * self.belief[i] + (1.0 - cfg.retention) / k;
            self.belief[i] = prior * likelihood;
            total += self.belief[i];
        }
        if total > 0.0 && total.is_finite() {
            self.belief.iter_mut().for_each(|b| *b /= total);
        } else {
            self.belief.iter_mut().for_each(|b| *b = 1.0 / k);
        }

        let (best, mass) =
            self.belief.iter().enumerate().fold((0, f64::MIN), |acc, (i, b)| if *b > acc.1 { (i, *b) } else { acc });
        if mass <= cfg.min_mass {
            self.candidate = None;
            return self.answer.as_deref();
        }
        let mode = &self.ids[best];
        if self.answer.as_deref() == Some(mode.as_str()) {
            self.candidate = None;
            return self.answer.as_deref();
        }
        let since = match &self.candidate {
            Some((id, t)) if id == mode => *t,
            _ => {
                self.candidate = Some((mode.clone(), self.time));
                self.time
            }
        };
        if self.time - since >= cfg.hysteresis - 1e-9 {
            self.answer = Some(mode.clone());
            self.candidate = None;
        }
        self.answer.as_deref()
    }

    fn sync_candidates(&mut self, scene: &Scene) {
        let same =
            self.ids.len() == scene.objects().len() && self.ids.iter().zip(scene.objects()).all(|(a, o)| *a == o.id);
        if !same {
            self.ids = scene.objects().iter().map(|o| o.id.clone()).collect();
            self.belief = vec![1.0 / self.ids.len() as f64; self.ids.len()];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pose::Pose;
    use crate::scene::{Category, SceneObject};

    fn scene() -> Scene {
        let o = |id: &str, c, p: [f64; 3], atop: Option<&str>| SceneObject {
            id: id.into(),
            label: id.into(),
            category: c,
            pose: Pose::from_position(Vector3::from(p)),
            atop: atop.map(String::from),
        };
        Scene::new(vec![
            o("pot", Category::A, [0.5, 0.0, 0.1], None),
            o("stove", Category::B, [0.5, 0.4, 0.0], None),
            o("counter", Category::B, [0.5, -0.4, 0.0], None),
            o("sink", Category::B, [0.0, 0.6, 0.0], None),
            o("beans", Category::C, [1.0, 0.5, 0.0], Some("counter")),
        ])
        .unwrap()
    }

    #[test]
    fn stationary_hand_is_none() {
        let mut t = ApproachTracker::new();
        let s = scene();
        for _ in 0..20 {
            assert_eq!(
                t.update(&Vector3::new(1.0, 1.0, 0.0), &Vector3::zeros(), &s, 0.05, &ApproachConfig::default()),
                None
            );
        }
    }

    /// Mirrors the update by hand for a hand heading straight at the beans.
    #[test]
    fn hand_moving_at_beans() {
        let s = scene();
        let cfg = ApproachConfig::default();
        let beans = s.get("beans").unwrap().pose.position;
        let start = beans + Vector3::new(0.0, 0.5, 0.0);
        let vel = (beans - start) / 0.5;
        let dt = 0.05;
        let mut t = ApproachTracker::new();
        let mut hand = start;
        let mut answers = Vec::new();

        // oracle: plain recursive Bayes with the same likelihood
        let mut belief = [0.2; 5];
        let mut first_confident = None;
        for k in 0..10 {
            answers.push(t.update(&hand, &vel, &s, dt, &cfg).map(String::from));
            let mut total = 0.0;
            for (i, o) in s.objects().iter().enumerate() {
                let to = o.pose.position - hand;
                let angle = (vel.dot(&to) / (vel.norm() * to.norm())).acos();
                let l = (-(angle / 0.5f64).powi(2)).exp() * (-(to.norm()).powi(2)).exp();
                belief[i] = (0.9 * belief[i] + 0.02) * l;
                total += belief[i];
            }
            belief.iter_mut().for_each(|b| *b /= total);
            if first_confident.is_none() && belief[4] > 0.6 {
                first_confident = Some(k);
            }
            hand += vel * dt;
        }
        let first = first_confident.expect("oracle never confident");
        // reported 0.3 s (6 ticks) after the mode first clears the mass gate
        assert_eq!(answers[first + 6].as_deref(), Some("beans"));
        assert!(answers[..first + 6].iter().all(|a| a.is_none()));
    }

    #[test]
    fn tie_keeps_previous_answer() {
        let s = Scene::new(vec![
            SceneObject {
                id: "a".into(),
                label: "a".into(),
                category: Category::B,
                pose: Pose::from_position(Vector3::new(1.0, 1.0, 0.0)),
                atop: None,
            },
            SceneObject {
                id: "b".into(),
                label: "b".into(),
                category: Category::B,
                pose: Pose::from_position(Vector3::new(1.0, -1.0, 0.0)),
                atop: None,
            },
        ])
        .unwrap();
        let cfg = ApproachConfig::default();
        let mut t = ApproachTracker::new();
        let mut hand = Vector3::new(0.0, 0.5, 0.0);
        let toward_a = Vector3::new(0.2, 0.1, 0.0);
        for _ in 0..20 {
            t.update(&hand, &toward_a, &s, 0.05, &cfg);
            hand += toward_a * 0.05;
        }
        assert_eq!(t.answer(), Some("a"));
        // now exactly between the two, moving along the bisector
        let mut hand = Vector3::new(0.0, 0.0, 0.0);
        for _ in 0..20 {
            assert_eq!(t.update(&hand, &Vector3::new(0.1, 0.0, 0.0), &s, 0.05, &cfg), Some("a"));
            hand.x += 0.005;
        }
    }
}
