//! Particle filter over DS-action parameters.
//!
//! Each particle carries a full [`DsAction`] hypothesis. The filter runs a
//! zero-dynamics prediction whose noise widens as confidence falls, weighs
//! particles by how well their reference twist explains the observed
//! end-effector twist, and on resampling redraws a `1 − c` fraction of the
//! particles from the DS actions available in the scene. LLM commands bypass
//! the filter and overwrite every particle.

use nalgebra::{Quaternion, UnitQuaternion, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ds::{sample_uniform_action, DsAction, DynamicsRanges};
use crate::pose::{exp_map, Pose, Twist};

/// Estimator tick period at 20 Hz.
pub const ESTIMATOR_DT: f64 = 1.0 / 20.0;

/// Total weight below which the filter falls back to uniform weights.
pub const WEIGHT_UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("no valid scene actions to anchor prior resampling")]
    EmptyScene,
    #[error("estimator config: {0}")]
    Invalid(&'static str),
}

/// Noise standard deviation at full (`low`) and zero (`high`) confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBand {
    pub low: f64,
    pub high: f64,
}

impl NoiseBand {
    pub const fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    /// `σ(c) = σ_low + (1 − c)(σ_high − σ_low)`
    pub fn at(&self, c: f64) -> f64 {
        let c = c.clamp(0.0, 1.0);
        self.low + (1.0 - c) * (self.high - self.low)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub particles: usize,
    /// Attractor position and Cartesian dynamics noise.
    pub noise_lin: NoiseBand,
    /// Rotational dynamics noise.
    pub noise_rot: NoiseBand,
    /// Attractor orientation noise (rotation-vector std).
    pub noise_goal_rot: NoiseBand,
    /// Weight of the angular twist error relative to the linear one.
    pub rotational_weight: f64,
    /// Multiplies the squared twist error inside the likelihood exponent.
    pub likelihood_precision: f64,
    pub dynamics_ranges: DynamicsRanges,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            particles: 300,
            noise_lin: NoiseBand::new(3e-4, 4e-3),
            noise_rot: NoiseBand::new(2e-4, 8.5e-3),
            noise_goal_rot: NoiseBand::new(2e-4, 8.5e-3),
            rotational_weight: 0.5,
            likelihood_precision: 200.0,
            dynamics_ranges: DynamicsRanges::default(),
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<(), EstimatorError> {
        if self.particles == 0 {
            return Err(EstimatorError::Invalid("need at least one particle"));
        }
        for band in [self.noise_lin, self.noise_rot, self.noise_goal_rot] {
            if !(band.low > 0.0 && band.low <= band.high) {
                return Err(EstimatorError::Invalid("noise bands need 0 < low <= high"));
            }
        }
        if !(self.rotational_weight >= 0.0 && self.likelihood_precision > 0.0) {
            return Err(EstimatorError::Invalid("rotational weight must be non-negative and precision positive"));
        }
        self.dynamics_ranges
            .validate()
            .map_err(|_| EstimatorError::Invalid("dynamics ranges must be negative and ordered"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub action: DsAction,
    pub weight: f64,
}

/// Weighted particle set plus its own RNG stream and the last published
/// estimate.
#[derive(Debug, Clone)]
pub struct BeliefState {
    particles: Vec<Particle>,
    rng: ChaCha8Rng,
    estimate: DsAction,
}

impl BeliefState {
    /// `n` copies of `action` with uniform weights.
    pub fn new(action: DsAction, n: usize, seed: u64) -> Self {
        assert!(n > 0, "belief needs at least one particle");
        let w = 1.0 / n as f64;
        Self {
            particles: vec![Particle { action, weight: w }; n],
            rng: ChaCha8Rng::seed_from_u64(seed),
            estimate: action,
        }
    }

    /// Belief from explicit particles; weights are normalized.
    pub fn from_particles(particles: Vec<Particle>, seed: u64) -> Self {
        assert!(!particles.is_empty(), "belief needs at least one particle");
        let mut belief = Self { estimate: particles[0].action, particles, rng: ChaCha8Rng::seed_from_u64(seed) };
        belief.normalize();
        belief.estimate = weighted_estimate(&belief.particles);
        belief
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Last published estimate.
    pub fn estimate(&self) -> &DsAction {
        &self.estimate
    }

    /// Recomputes and publishes the weighted-mean estimate.
    pub fn refresh_estimate(&mut self) -> &DsAction {
        self.estimate = weighted_estimate(&self.particles);
        &self.estimate
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// Replaces every particle with `action`.
    pub fn set_commanded_action(&mut self, action: DsAction) {
        let w = 1.0 / self.particles.len() as f64;
        for p in &mut self.particles {
            p.action = action;
            p.weight = w;
        }
        self.estimate = action;
    }

    /// Zero-dynamics random walk with confidence-scaled noise.
    pub fn predict(&mut self, c: f64, dt: f64, cfg: &EstimatorConfig) {
        let sqrt_dt = dt.max(0.0).sqrt();
        let s_pos = cfg.noise_lin.at(c) * sqrt_dt;
        let s_goal_rot = cfg.noise_goal_rot.at(c) * sqrt_dt;
        let s_dyn_lin = cfg.noise_lin.at(c) * sqrt_dt;
        let s_dyn_rot = cfg.noise_rot.at(c) * sqrt_dt;
        let rng = &mut self.rng;
        for p in &mut self.particles {
            let a = &mut p.action;
            let dp = gaussian3(rng) * s_pos;
            let dr = gaussian3(rng) * s_goal_rot;
            let mut dyn_noise = Vector6::zeros();
            for i in 0..6 {
                let z: f64 = rng.sample(StandardNormal);
                dyn_noise[i] = z * if i < 3 { s_dyn_lin } else { s_dyn_rot };
            }
            let orientation = exp_map(&dr) * a.attractor.orientation();
            a.attractor = Pose::new(a.attractor.position + dp, orientation);
            a.dynamics.0 += dyn_noise;
            a.dynamics = cfg.dynamics_ranges.clamp(&a.dynamics);
        }
    }

    /// Multiplies each weight by the twist likelihood at pose `x`, then
    /// normalizes and publishes the new estimate.
    pub fn update_weights(&mut self, x: &Pose, observed: &Twist, cfg: &EstimatorConfig) {
        for p in &mut self.particles {
            let e2 = twist_error_sq(observed, &p.action.reference_velocity(x), cfg.rotational_weight);
            p.weight *= (-cfg.likelihood_precision * e2).exp();
        }
        self.normalize();
        self.estimate = weighted_estimate(&self.particles);
    }

    /// Redraws `⌊(1 − c)·N⌋` particles from `valid_actions` and the rest by
    /// systematic resampling; weights become uniform.
    pub fn resample(
        &mut self,
        c: f64,
        valid_actions: &[DsAction],
        ranges: &DynamicsRanges,
    ) -> Result<(), EstimatorError> {
        if valid_actions.is_empty() {
            return Err(EstimatorError::EmptyScene);
        }
        let n = self.particles.len();
        let rate = resample_rate(c);
        let n_prior = ((rate * n as f64).floor() as usize).min(n);
        let n_keep = n - n_prior;

        let mut next = Vec::with_capacity(n);
        if n_keep > 0 {
            let step = 1.0 / n_keep as f64;
            let start: f64 = self.rng.random::<f64>() * step;
            let mut cumulative = self.particles[0].weight;
            let mut i = 0;
            for k in 0..n_keep {
                let u = start + k as f64 * step;
                while u > cumulative && i + 1 < n {
                    i += 1;
                    cumulative += self.particles[i].weight;
                }
                next.push(self.particles[i].action);
            }
        }
        for _ in 0..n_prior {
            let idx = self.rng.random_range(0..valid_actions.len());
            let prior = &valid_actions[idx];
            let mut a = sample_uniform_action(&prior.attractor, &mut self.rng, ranges);
            a.speed_cap = prior.speed_cap;
            a.compliant = prior.compliant;
            next.push(a);
        }

        let w = 1.0 / n as f64;
        self.particles = next.into_iter().map(|action| Particle { action, weight: w }).collect();
        Ok(())
    }

    /// Up to `max` particles ordered by descending weight (ties by index).
    pub fn cloud(&self, max: usize) -> Vec<(Vector3<f64>, f64)> {
        let mut idx: Vec<usize> = (0..self.particles.len()).collect();
        idx.sort_by(|&a, &b| self.particles[b].weight.total_cmp(&self.particles[a].weight).then(a.cmp(&b)));
        idx.into_iter()
            .take(max)
            .map(|i| (self.particles[i].action.attractor.position, self.particles[i].weight))
            .collect()
    }

    fn normalize(&mut self) {
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        let n = self.particles.len() as f64;
        if !(total.is_finite() && total >= WEIGHT_UNDERFLOW) {
            for p in &mut self.particles {
                p.weight = 1.0 / n;
            }
        } else {
            for p in &mut self.particles {
                p.weight /= total;
            }
        }
    }
}

/// Fraction of particles redrawn from scene priors: `clip(1 − c, 0, 1)`.
pub fn resample_rate(c: f64) -> f64 {
    (1.0 - c).clamp(0.0, 1.0)
}

/// Squared stacked twist error with the angular block scaled by `eta`.
pub fn twist_error_sq(observed: &Twist, predicted: &Twist, eta: f64) -> f64 {
    let d = *observed - *predicted;
    d.linear.norm_squared() + (d.angular * eta).norm_squared()
}

/// Weighted mean of particle actions. Quaternions are sign-aligned to the
/// heaviest particle before the normalized weighted sum.
pub fn weighted_estimate(particles: &[Particle]) -> DsAction {
    let best = particles
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.weight.total_cmp(&b.weight).then(ib.cmp(ia)))
        .map(|(_, p)| p)
        .expect("non-empty particle set");
    let reference = *best.action.attractor.orientation().quaternion();

    let total: f64 = particles.iter().map(|p| p.weight).sum();
    let norm = if total > 0.0 { total } else { 1.0 };
    let mut position = Vector3::zeros();
    let mut dynamics = Vector6::zeros();
    let mut quat = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    for p in particles {
        let w = p.weight / norm;
        position += p.action.attractor.position * w;
        dynamics += p.action.dynamics.0 * w;
        let q = *p.action.attractor.orientation().quaternion();
        let aligned = if q.dot(&reference) < 0.0 { -q } else { q };
        quat += aligned * w;
    }
    let orientation = if quat.norm() > 1e-12 {
        UnitQuaternion::new_normalize(quat)
    } else {
        UnitQuaternion::new_normalize(reference)
    };
    DsAction {
        attractor: Pose::new(position, orientation),
        dynamics: crate::ds::Dynamics(dynamics),
        speed_cap: best.action.speed_cap,
        compliant: best.action.compliant,
    }
}

fn gaussian3<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let z: f64 = rng.sample(StandardNormal);
    Vector3::new(x, y, z)
}
