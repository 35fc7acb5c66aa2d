//! Augmented Monte Carlo localization baseline.
//!
//! Every particle matches the observations to the map on its own (per-class
//! optimal assignment) and is weighted by a Gaussian likelihood of the matched
//! distances. Short- and long-term averages of the per-observation likelihood
//! drive random-particle injection for recovery.

use ilm_core::assignment::{match_landmarks, MatchStrategy};
use ilm_core::field_map::{FieldMap, LandmarkClass};
use ilm_core::fusion::{predict_state, systematic_resample_offset, ControlInput, ParticleSet};
use ilm_core::geometry::{Point2, Pose2D};
use ilm_core::rng::{self, StreamRng};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::experiments::ExperimentError;
use crate::simulator::sample_pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmclConfig {
    pub particle_count: usize,
    pub alpha_slow: f64,
    pub alpha_fast: f64,
    /// Standard deviation of the matched-distance likelihood, meters.
    pub sensor_std: f64,
    /// Matched distances are capped here; unmatched observations count as this far.
    pub miss_distance: f64,
    /// Per-step motion noise standard deviations (m, m, rad).
    pub process_std: [f64; 3],
    /// Uniform half-widths of the initial spread around the start pose.
    pub init_spread: [f64; 3],
}

impl Default for AmclConfig {
    fn default() -> Self {
        Self {
            particle_count: 200,
            alpha_slow: 0.001,
            alpha_fast: 0.1,
            sensor_std: 0.35,
            miss_distance: 1.5,
            process_std: [0.012, 0.012, 0.012],
            init_spread: [0.2, 0.2, 0.1],
        }
    }
}

impl AmclConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::Invalid(m.into()));
        if self.particle_count == 0 {
            return bad("particle_count must be at least 1");
        }
        if !(0.0 <= self.alpha_slow && self.alpha_slow < self.alpha_fast && self.alpha_fast <= 1.0) {
            return bad("need 0 <= alpha_slow < alpha_fast <= 1");
        }
        if !(self.sensor_std > 0.0 && self.miss_distance > 0.0) {
            return bad("sensor_std and miss_distance must be positive");
        }
        if self.process_std.iter().chain(&self.init_spread).any(|s| s.is_nan() || *s < 0.0) {
            return bad("process_std and init_spread must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Amcl<'m> {
    pub set: ParticleSet,
    pub w_slow: f64,
    pub w_fast: f64,
    cfg: AmclConfig,
    map: &'m FieldMap,
    seed: u64,
    step: u64,
}

fn gaussian(r: &mut StreamRng, std: f64) -> f64 {
    if std > 0.0 {
        Normal::new(0.0, std).expect("finite std").sample(r)
    } else {
        0.0
    }
}

impl<'m> Amcl<'m> {
    pub fn new(start: &Pose2D, map: &'m FieldMap, cfg: AmclConfig, seed: u64) -> Result<Self, ExperimentError> {
        cfg.validate()?;
        let set = ParticleSet::around(start, cfg.particle_count, cfg.init_spread, rng::derive_seed(seed, &[0xA3C1]));
        Ok(Self { set, w_slow: 0.0, w_fast: 0.0, cfg, map, seed, step: 0 })
    }

    /// Sum of squared capped matched distances for one particle.
    fn squared_residual(&self, pose: &Pose2D, obs: &[(Point2, LandmarkClass)]) -> f64 {
        let guess: Vec<(Point2, LandmarkClass)> = obs.iter().map(|(p, c)| (pose.transform_point(p), *c)).collect();
        let cap = self.cfg.miss_distance;
        match match_landmarks(&guess, self.map, MatchStrategy::Separate) {
            Ok(m) => {
                let matched: f64 = m.correspondences.iter().map(|c| c.distance.min(cap).powi(2)).sum();
                matched + (obs.len() - m.len()) as f64 * cap * cap
            }
            Err(_) => obs.len() as f64 * cap * cap,
        }
    }

    pub fn step(&mut self, u: &ControlInput, obs: &[(Point2, LandmarkClass)], dt: f64) -> Pose2D {
        let mut r = rng::stream(self.seed, &[0xA3C1, self.step]);
        self.step += 1;
        let std = self.cfg.process_std;
        for p in &mut self.set.particles {
            let q = predict_state(p, u, dt);
            let (wx, wy, wt) = (gaussian(&mut r, std[0]), gaussian(&mut r, std[1]), gaussian(&mut r, std[2]));
            *p = Pose2D::new(q.x() + wx, q.y() + wy, q.theta() + wt);
        }
        if obs.is_empty() {
            return self.set.estimate();
        }

        let two_var = 2.0 * self.cfg.sensor_std * self.cfg.sensor_std;
        let loglik: Vec<f64> = self.set.particles.iter().map(|p| -self.squared_residual(p, obs) / two_var).collect();
        let n_obs = obs.len() as f64;
        let w_avg = loglik.iter().map(|l| (l / n_obs).exp()).sum::<f64>() / loglik.len() as f64;
        self.w_slow += self.cfg.alpha_slow * (w_avg - self.w_slow);
        self.w_fast += self.cfg.alpha_fast * (w_avg - self.w_fast);

        let max = loglik.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let raw: Vec<f64> = loglik.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = raw.iter().sum();
        self.set.weights = raw.iter().map(|w| w / sum).collect();
        let estimate = self.set.estimate();

        let p_random = if self.w_slow > 0.0 { (1.0 - self.w_fast / self.w_slow).max(0.0) } else { 0.0 };
        let n = self.set.len();
        let idx = systematic_resample_offset(&self.set.weights, n, r.random::<f64>());
        let particles = idx
            .into_iter()
            .enumerate()
            .map(|(k, i)| {
                if p_random > 0.0 && r.random::<f64>() < p_random {
                    sample_pose(self.map, self.seed, (self.step << 20) | k as u64)
                } else {
                    self.set.particles[i]
                }
            })
            .collect();
        self.set = ParticleSet::uniform(particles);
        estimate
    }
}
