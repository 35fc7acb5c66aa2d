//! Correct-matching coverage over initial guesses: grid heatmaps and rate surfaces.

use std::f64::consts::PI;

use ilm_core::field_map::FieldMap;
use ilm_core::geometry::{pose_error, Point2, Pose2D};
use ilm_core::registration::{icp_localize, ilm_localize, RegistrationConfig, RegistrationResult};
use ilm_core::rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::simulator::{as_classed, as_points, ground_truth_pairs, sample_pose, visible_landmarks, SensorModel, SimObservation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegistrationMethod {
    Ilm,
    Icp,
}

impl RegistrationMethod {
    pub const ALL: [RegistrationMethod; 2] = [RegistrationMethod::Ilm, RegistrationMethod::Icp];

    pub fn name(self) -> &'static str {
        match self {
            RegistrationMethod::Ilm => "ilm",
            RegistrationMethod::Icp => "icp",
        }
    }

    pub fn localize(
        self,
        obs: &[SimObservation],
        initial: Pose2D,
        map: &FieldMap,
        cfg: &RegistrationConfig,
    ) -> Option<RegistrationResult> {
        match self {
            RegistrationMethod::Ilm => ilm_localize(&as_classed(obs), initial, map, cfg).ok(),
            RegistrationMethod::Icp => icp_localize(&as_points(obs), initial, map, cfg).ok(),
        }
    }
}

/// Whether registration from `initial` recovers exactly the generating correspondences.
pub fn matches_ground_truth(
    method: RegistrationMethod,
    obs: &[SimObservation],
    initial: Pose2D,
    map: &FieldMap,
    cfg: &RegistrationConfig,
) -> (bool, Option<RegistrationResult>) {
    let r = method.localize(obs, initial, map, cfg);
    let ok = r.as_ref().is_some_and(|r| r.matched_pairs() == ground_truth_pairs(obs));
    (ok, r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub ix: usize,
    pub iy: usize,
    /// Initial guess position (cell center).
    pub x: f64,
    pub y: f64,
    pub correct: bool,
    /// Position error of the final pose; NaN when registration failed.
    pub final_error: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub true_pose: Pose2D,
    pub method: RegistrationMethod,
    pub max_iter: usize,
    pub resolution: f64,
    pub initial_theta: f64,
    pub nx: usize,
    pub ny: usize,
    pub observations: usize,
    pub cells: Vec<HeatmapCell>,
}

impl HeatmapGrid {
    pub fn coverage(&self) -> f64 {
        self.cells.iter().filter(|c| c.correct).count() as f64 / self.cells.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapConfig {
    pub true_pose: Pose2D,
    pub resolution: f64,
    pub initial_theta: f64,
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self { true_pose: Pose2D::new(1.0, 1.0, 0.0), resolution: 0.25, initial_theta: 0.0 }
    }
}

/// Cell centers tiling the field at `resolution`.
pub fn grid_centers(map: &FieldMap, resolution: f64) -> (usize, usize, Vec<(usize, usize, Point2)>) {
    let nx = ((map.field_length() / resolution).round() as usize).max(1);
    let ny = ((map.field_width() / resolution).round() as usize).max(1);
    let (dx, dy) = (map.field_length() / nx as f64, map.field_width() / ny as f64);
    let centers = (0..ny)
        .flat_map(|iy| {
            (0..nx).map(move |ix| {
                let p = Point2::new(-map.field_length() / 2.0 + (ix as f64 + 0.5) * dx, -map.field_width() / 2.0 + (iy as f64 + 0.5) * dy);
                (ix, iy, p)
            })
        })
        .collect();
    (nx, ny, centers)
}

pub fn heatmap(
    cfg: &HeatmapConfig,
    method: RegistrationMethod,
    max_iter: usize,
    map: &FieldMap,
    sensor: &SensorModel,
    reg: &RegistrationConfig,
    seed: u64,
) -> Result<HeatmapGrid, ExperimentError> {
    if cfg.resolution.is_nan() || cfg.resolution <= 0.0 {
        return Err(ExperimentError::Invalid("grid resolution must be positive".into()));
    }
    sensor.validate()?;
    let reg = reg.with_max_iteration(max_iter);
    reg.validate()?;
    let obs = visible_landmarks(&cfg.true_pose, map, sensor, seed);
    if obs.len() < 2 {
        return Err(ExperimentError::Invalid(format!("true pose sees only {} landmarks", obs.len())));
    }
    let (nx, ny, centers) = grid_centers(map, cfg.resolution);
    let cells = centers
        .par_iter()
        .map(|&(ix, iy, p)| {
            let initial = Pose2D::new(p.x, p.y, cfg.initial_theta);
            let (correct, r) = matches_ground_truth(method, &obs, initial, map, &reg);
            HeatmapCell {
                ix,
                iy,
                x: p.x,
                y: p.y,
                correct,
                final_error: r.as_ref().map_or(f64::NAN, |r| pose_error(&r.pose, &cfg.true_pose).position),
                iterations: r.map_or(0, |r| r.iterations),
            }
        })
        .collect();
    Ok(HeatmapGrid {
        true_pose: cfg.true_pose,
        method,
        max_iter,
        resolution: cfg.resolution,
        initial_theta: cfg.initial_theta,
        nx,
        ny,
        observations: obs.len(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub method: RegistrationMethod,
    pub position_offset: f64,
    pub angle_offset: f64,
    pub trials: usize,
    pub correct: usize,
}

impl RateRow {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.correct as f64 / self.trials as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub pose_samples: usize,
    pub position_offsets: Vec<f64>,
    pub angle_offsets: Vec<f64>,
    pub max_iter: usize,
    /// Poses seeing fewer landmarks are redrawn.
    pub min_observations: usize,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            pose_samples: 200,
            position_offsets: vec![0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
            angle_offsets: [0.0f64, 15.0, 30.0, 45.0, 60.0, 90.0].iter().map(|d| d.to_radians()).collect(),
            max_iter: 8,
            min_observations: 3,
        }
    }
}

/// Samples true poses field-wide and, for every (position, angle) offset,
/// perturbs each in a seeded random direction; counts correct matchings per method.
pub fn matching_rate_surfaces(
    cfg: &RateConfig,
    map: &FieldMap,
    sensor: &SensorModel,
    reg: &RegistrationConfig,
    seed: u64,
) -> Result<Vec<RateRow>, ExperimentError> {
    sensor.validate()?;
    let reg = reg.with_max_iteration(cfg.max_iter);
    reg.validate()?;
    if cfg.min_observations < 2 {
        return Err(ExperimentError::Invalid("min_observations must be at least 2".into()));
    }
    let scenes: Vec<(Pose2D, Vec<SimObservation>)> = (0..cfg.pose_samples as u64)
        .into_par_iter()
        .map(|i| {
            (0u64..)
                .map(|attempt| {
                    let pose = sample_pose(map, seed, i * 1_000 + attempt);
                    (pose, visible_landmarks(&pose, map, sensor, rng::derive_seed(seed, &[i, attempt])))
                })
                .find(|(_, o)| o.len() >= cfg.min_observations)
                .expect("some pose sees enough landmarks")
        })
        .collect();

    let mut rows = Vec::new();
    for &dp in &cfg.position_offsets {
        for &da in &cfg.angle_offsets {
            let outcomes: Vec<[bool; 2]> = scenes
                .par_iter()
                .enumerate()
                .map(|(i, (truth, obs))| {
                    let mut r = rng::stream(seed, &[0x0FF5, i as u64, dp.to_bits(), da.to_bits()]);
                    let dir = r.random_range(-PI..PI);
                    let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
                    let initial = Pose2D::new(truth.x() + dp * dir.cos(), truth.y() + dp * dir.sin(), truth.theta() + sign * da);
                    RegistrationMethod::ALL.map(|m| matches_ground_truth(m, obs, initial, map, &reg).0)
                })
                .collect();
            for (k, method) in RegistrationMethod::ALL.into_iter().enumerate() {
                rows.push(RateRow {
                    method,
                    position_offset: dp,
                    angle_offset: da,
                    trials: outcomes.len(),
                    correct: outcomes.iter().filter(|o| o[k]).count(),
                });
            }
        }
    }
    Ok(rows)
}

/// Correct-matching rate at `truth` with initial positions on the heatmap grid
/// and headings drawn uniformly at random.
pub fn random_orientation_rate(
    cfg: &HeatmapConfig,
    method: RegistrationMethod,
    max_iter: usize,
    map: &FieldMap,
    sensor: &SensorModel,
    reg: &RegistrationConfig,
    seed: u64,
) -> Result<f64, ExperimentError> {
    let reg = reg.with_max_iteration(max_iter);
    reg.validate()?;
    let obs = visible_landmarks(&cfg.true_pose, map, sensor, seed);
    let (_, _, centers) = grid_centers(map, cfg.resolution);
    let hits = centers
        .par_iter()
        .enumerate()
        .filter(|(i, (_, _, p))| {
            let theta = rng::stream(seed, &[0x7E7A, *i as u64]).random_range(-PI..PI);
            matches_ground_truth(method, &obs, Pose2D::new(p.x, p.y, theta), map, &reg).0
        })
        .count();
    Ok(hits as f64 / centers.len() as f64)
}
