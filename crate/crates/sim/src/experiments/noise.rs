//! Estimator accuracy under observation noise with known correspondences.

use ilm_core::field_map::FieldMap;
use ilm_core::geometry::{angle_diff, Point2, Pose2D};
use ilm_core::pose_estimation::{estimate_pose, Estimator, PointPairSet};
use ilm_core::rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::simulator::{sample_pose, visible_landmarks, SensorModel, SimObservation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseRow {
    pub width: f64,
    pub method: Estimator,
    pub poses: usize,
    pub mean_position_error: f64,
    pub mean_orientation_error: f64,
}

/// Poses seeing at least `min_obs` landmarks, redrawn deterministically otherwise.
pub(crate) fn scenes(
    n: usize,
    map: &FieldMap,
    sensor: &SensorModel,
    seed: u64,
    min_obs: usize,
) -> Vec<(Pose2D, Vec<SimObservation>)> {
    let exact = sensor.noiseless();
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            (0u64..)
                .map(|attempt| {
                    let pose = sample_pose(map, seed, (i << 16) | attempt);
                    (pose, visible_landmarks(&pose, map, &exact, 0))
                })
                .find(|(_, o)| o.len() >= min_obs)
                .expect("some pose sees enough landmarks")
        })
        .collect()
}

/// For each width, perturbs every body-frame observation by uniform ±width
/// noise and estimates the pose from ground-truth correspondences with both
/// estimators on identical data.
pub fn sweep_pose_noise(
    widths: &[f64],
    n_poses: usize,
    map: &FieldMap,
    sensor: &SensorModel,
    seed: u64,
) -> Result<Vec<NoiseRow>, ExperimentError> {
    if n_poses == 0 {
        return Err(ExperimentError::Invalid("pose count must be positive".into()));
    }
    if widths.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(ExperimentError::Invalid("noise widths must be finite and nonnegative".into()));
    }
    sensor.validate()?;
    let scenes = scenes(n_poses, map, sensor, seed, 2);
    let mut rows = Vec::new();
    for &w in widths {
        let errs: Vec<[f64; 4]> = scenes
            .par_iter()
            .enumerate()
            .map(|(i, (truth, obs))| {
                let mut r = rng::stream(seed, &[0x7015E, i as u64, w.to_bits()]);
                let body: Vec<Point2> = obs
                    .iter()
                    .map(|o| if w > 0.0 { o.position + Point2::new(r.random_range(-w..=w), r.random_range(-w..=w)) } else { o.position })
                    .collect();
                let world: Vec<Point2> = obs.iter().map(|o| map.landmark_by_id(o.landmark_id).expect("on map").position).collect();
                let pairs = PointPairSet::new(&body, &world).expect("two or more pairs");
                let mut out = [f64::NAN; 4];
                for (k, m) in [Estimator::Dlt, Estimator::Kabsch].into_iter().enumerate() {
                    if let Ok(est) = estimate_pose(&pairs, m) {
                        out[2 * k] = est.pose.translation().distance(&truth.translation());
                        out[2 * k + 1] = angle_diff(est.pose.theta(), truth.theta()).abs();
                    }
                }
                out
            })
            .collect();
        for (k, method) in [Estimator::Dlt, Estimator::Kabsch].into_iter().enumerate() {
            let valid: Vec<&[f64; 4]> = errs.iter().filter(|e| e[2 * k].is_finite()).collect();
            let n = valid.len().max(1) as f64;
            rows.push(NoiseRow {
                width: w,
                method,
                poses: valid.len(),
                mean_position_error: valid.iter().map(|e| e[2 * k]).sum::<f64>() / n,
                mean_orientation_error: valid.iter().map(|e| e[2 * k + 1]).sum::<f64>() / n,
            });
        }
    }
    Ok(rows)
}
