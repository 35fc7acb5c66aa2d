//! Odometry/landmark fusion: unicycle-with-slip dynamics, particle filter and EKF.
//!
//! State `X = (t_x, t_y, θ)`, input `U = (v_f, v_s, ω)` in the body frame:
//!
//! ```text
//! X_{k+1} = X_k + [R(θ_k) 0; 0 1] · U_k · Δt
//! Z_k     = X_k + V_k
//! ```

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_diff, circular_mean, Pose2D};
use crate::rng::{self, StreamRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("weights sum to {0}, expected 1")]
    Unnormalized(f64),
    #[error("weights must be finite and nonnegative")]
    InvalidWeights,
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
}

/// Body-frame velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub v_f: f64,
    pub v_s: f64,
    pub omega: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { v_f: 0.0, v_s: 0.0, omega: 0.0 };

    pub fn new(v_f: f64, v_s: f64, omega: f64) -> Self {
        Self { v_f, v_s, omega }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Per-step standard deviations (m, m, rad) of the process noise.
    pub process_std: [f64; 3],
    /// Standard deviations (m, m, rad) of the pose measurement.
    pub measurement_std: [f64; 3],
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self { process_std: [0.012, 0.012, 0.012], measurement_std: [0.3, 0.3, 0.05] }
    }
}

impl NoiseModel {
    pub const ZERO: NoiseModel = NoiseModel { process_std: [0.0; 3], measurement_std: [0.0; 3] };

    pub fn validate(&self) -> Result<(), FusionError> {
        if self.process_std.iter().chain(&self.measurement_std).all(|s| s.is_finite() && *s >= 0.0) {
            Ok(())
        } else {
            Err(FusionError::InvalidConfig("noise standard deviations must be finite and nonnegative".into()))
        }
    }
}

pub fn predict_state(x: &Pose2D, u: &ControlInput, dt: f64) -> Pose2D {
    let (s, c) = x.theta().sin_cos();
    Pose2D::new(
        x.x() + (c * u.v_f - s * u.v_s) * dt,
        x.y() + (s * u.v_f + c * u.v_s) * dt,
        x.theta() + u.omega * dt,
    )
}

/// `∂f/∂X` of [`predict_state`].
pub fn dynamics_jacobian(x: &Pose2D, u: &ControlInput, dt: f64) -> Matrix3<f64> {
    let (s, c) = x.theta().sin_cos();
    let mut f = Matrix3::identity();
    f[(0, 2)] = (-s * u.v_f - c * u.v_s) * dt;
    f[(1, 2)] = (c * u.v_f - s * u.v_s) * dt;
    f
}

/// `1 / Σ w²` for normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64, FusionError> {
    check_normalized(weights)?;
    Ok(n_eff(weights))
}

/// `(Σ r)² / Σ r²` with `r = w / max w`: equal to `1 / Σ w²` for normalized
/// weights, and exactly `N` for uniform ones.
fn n_eff(weights: &[f64]) -> f64 {
    let max = weights.iter().copied().fold(0.0, f64::max);
    let (s, s2) = weights.iter().fold((0.0, 0.0), |(s, s2), w| {
        let r = w / max;
        (s + r, s2 + r * r)
    });
    s * s / s2
}

fn check_normalized(weights: &[f64]) -> Result<(), FusionError> {
    if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(FusionError::InvalidWeights);
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(FusionError::Unnormalized(sum));
    }
    Ok(())
}

/// Systematic resampling with an explicit offset `u0 ∈ [0, 1)`: draws `n`
/// indices at positions `(k + u0) / n` of the cumulative weight.
pub fn systematic_resample_offset(weights: &[f64], n: usize, u0: f64) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights[0];
    let mut i = 0;
    let last = weights.len() - 1;
    for k in 0..n {
        let pos = (k as f64 + u0) / n as f64;
        while pos >= cumulative && i < last {
            i += 1;
            cumulative += weights[i];
        }
        out.push(i);
    }
    out
}

/// Systematic resampling of `weights.len()` indices with a seeded offset.
pub fn systematic_resample(weights: &[f64], seed: u64) -> Result<Vec<usize>, FusionError> {
    check_normalized(weights)?;
    let u0 = rng::stream(seed, &[0x5E5A]).random::<f64>();
    Ok(systematic_resample_offset(weights, weights.len(), u0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    pub particles: Vec<Pose2D>,
    pub weights: Vec<f64>,
}

impl ParticleSet {
    pub fn uniform(particles: Vec<Pose2D>) -> Self {
        let n = particles.len();
        assert!(n >= 1, "particle set must be nonempty");
        Self { particles, weights: vec![1.0 / n as f64; n] }
    }

    /// `n` particles spread uniformly within `±spread` (m, m, rad) of `center`.
    pub fn around(center: &Pose2D, n: usize, spread: [f64; 3], seed: u64) -> Self {
        let mut rng = rng::stream(seed, &[0x1417]);
        let mut jitter = |w: f64| if w > 0.0 { rng.random_range(-w..=w) } else { 0.0 };
        let particles = (0..n)
            .map(|_| {
                let (dx, dy, dt) = (jitter(spread[0]), jitter(spread[1]), jitter(spread[2]));
                Pose2D::new(center.x() + dx, center.y() + dy, center.theta() + dt)
            })
            .collect();
        Self::uniform(particles)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Weighted mean position and circular-mean heading.
    pub fn estimate(&self) -> Pose2D {
        let (x, y) = self
            .particles
            .iter()
            .zip(&self.weights)
            .fold((0.0, 0.0), |(x, y), (p, w)| (x + w * p.x(), y + w * p.y()));
        let theta = circular_mean(self.particles.iter().zip(&self.weights).map(|(p, w)| (p.theta(), *w)));
        Pose2D::new(x, y, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub estimate: Pose2D,
    pub n_eff: f64,
    pub resampled: bool,
    /// All likelihoods underflowed; weights were reset to uniform.
    pub diverged: bool,
}

fn gaussian(std: f64) -> Option<Normal<f64>> {
    (std > 0.0).then(|| Normal::new(0.0, std).expect("finite std"))
}

/// Log-likelihood of measuring `z` from `x` under independent Gaussians on
/// `(Δx, Δy, wrap(Δθ))`, up to a constant.
pub fn measurement_log_likelihood(x: &Pose2D, z: &Pose2D, std: &[f64; 3]) -> f64 {
    let d = [z.x() - x.x(), z.y() - x.y(), angle_diff(z.theta(), x.theta())];
    let term = |d: f64, s: f64| match (s > 0.0, d == 0.0) {
        (true, _) => (d / s).powi(2),
        (false, true) => 0.0,
        (false, false) => f64::INFINITY,
    };
    -0.5 * d.iter().zip(std).map(|(d, s)| term(*d, *s)).sum::<f64>()
}

/// One predict/update/resample cycle. `step` selects the random stream so a
/// sequence of calls with increasing `step` is reproducible from `seed`.
pub fn pf_step(
    ps: &ParticleSet,
    u: &ControlInput,
    z: Option<&Pose2D>,
    dt: f64,
    noise: &NoiseModel,
    seed: u64,
    step: u64,
) -> (ParticleSet, StepInfo) {
    let n = ps.len();
    let mut rng: StreamRng = rng::stream(seed, &[0xF17E, step]);
    let dists = noise.process_std.map(gaussian);
    let sample = |i: usize, rng: &mut StreamRng| dists[i].map_or(0.0, |d| d.sample(rng));

    let particles: Vec<Pose2D> = ps
        .particles
        .iter()
        .map(|p| {
            let q = predict_state(p, u, dt);
            let (wx, wy, wt) = (sample(0, &mut rng), sample(1, &mut rng), sample(2, &mut rng));
            Pose2D::new(q.x() + wx, q.y() + wy, q.theta() + wt)
        })
        .collect();

    let mut diverged = false;
    let weights = match z {
        None => ps.weights.clone(),
        Some(z) => {
            let logw: Vec<f64> = particles
                .iter()
                .zip(&ps.weights)
                .map(|(p, w)| w.ln() + measurement_log_likelihood(p, z, &noise.measurement_std))
                .collect();
            let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let raw: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
            let sum: f64 = raw.iter().sum();
            if max.is_finite() && sum.is_finite() && sum > 0.0 {
                raw.iter().map(|w| w / sum).collect()
            } else {
                diverged = true;
                vec![1.0 / n as f64; n]
            }
        }
    };

    let n_eff = n_eff(&weights);
    let mut next = ParticleSet { particles, weights };
    let resampled = n_eff < n as f64 / 2.0;
    if resampled {
        let idx = systematic_resample_offset(&next.weights, n, rng.random::<f64>());
        next = ParticleSet::uniform(idx.into_iter().map(|i| next.particles[i]).collect());
    }
    let estimate = next.estimate();
    if diverged {
        log::warn!("particle filter weights collapsed at step {step}; reset to uniform");
    }
    (next, StepInfo { estimate, n_eff, resampled, diverged })
}

/// Stateful wrapper around [`pf_step`] that advances the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleFilter {
    pub set: ParticleSet,
    pub noise: NoiseModel,
    seed: u64,
    step: u64,
}

impl ParticleFilter {
    pub fn new(set: ParticleSet, noise: NoiseModel, seed: u64) -> Self {
        Self { set, noise, seed, step: 0 }
    }

    pub fn step(&mut self, u: &ControlInput, z: Option<&Pose2D>, dt: f64) -> StepInfo {
        let (set, info) = pf_step(&self.set, u, z, dt, &self.noise, self.seed, self.step);
        self.set = set;
        self.step += 1;
        info
    }
}

fn diag(std: &[f64; 3]) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(std[0] * std[0], std[1] * std[1], std[2] * std[2]))
}

/// Extended Kalman filter step with `H = I` and a Joseph-form update.
pub fn ekf_step(
    mean: &Pose2D,
    cov: &Matrix3<f64>,
    u: &ControlInput,
    z: Option<&Pose2D>,
    dt: f64,
    noise: &NoiseModel,
) -> Result<(Pose2D, Matrix3<f64>), FusionError> {
    let f = dynamics_jacobian(mean, u, dt);
    let pred = predict_state(mean, u, dt);
    let p = f * cov * f.transpose() + diag(&noise.process_std);
    let Some(z) = z else {
        return Ok((pred, p));
    };

    let r = diag(&noise.measurement_std);
    let s = p + r;
    let s_inv = s.try_inverse().filter(|m| m.iter().all(|v| v.is_finite())).ok_or(FusionError::SingularInnovation)?;
    let k = p * s_inv;
    let y = Vector3::new(z.x() - pred.x(), z.y() - pred.y(), angle_diff(z.theta(), pred.theta()));
    let dx = k * y;
    let post = Pose2D::new(pred.x() + dx[0], pred.y() + dx[1], pred.theta() + dx[2]);
    let i_k = Matrix3::identity() - k;
    let p_post = i_k * p * i_k.transpose() + k * r * k.transpose();
    Ok((post, (p_post + p_post.transpose()) * 0.5))
}
