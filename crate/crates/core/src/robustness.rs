//! Outlier dropping by RANSAC and multi-hypothesis global localization.

use std::cmp::Ordering;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{match_landmarks, Correspondence, MatchStrategy, Matching};
use crate::field_map::{FieldMap, LandmarkClass};
use crate::geometry::{Point2, Pose2D};
use crate::pose_estimation::{estimate_pose_kabsch, fit_rigid, PointPairSet};
use crate::registration::{ilm_localize, matching_errors, RegistrationConfig, RegistrationError, RegistrationResult};
use crate::rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobustnessError {
    #[error("RANSAC needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("no consensus set of at least 2 pairs")]
    NoConsensus,
    #[error("no frame observes more than {} landmarks", .min_landmarks - 1)]
    NoQualifyingFrame { min_landmarks: usize },
    #[error("every hypothesis exceeded the {threshold} m maximum matching error on frame {frame}")]
    AllHypothesesRejected { frame: usize, threshold: f64 },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Registration(#[from] RegistrationError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutlierConfig {
    /// Mean matching error above which outlier handling kicks in.
    pub error_threshold: f64,
    /// RANSAC runs only with at least this many observations.
    pub min_landmarks: usize,
    pub ransac_iterations: usize,
    pub inlier_threshold: f64,
    pub min_sample: usize,
    pub seed: u64,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        Self {
            error_threshold: 0.5,
            min_landmarks: 6,
            ransac_iterations: 50,
            inlier_threshold: 0.3,
            min_sample: 2,
            seed: 0,
        }
    }
}

impl OutlierConfig {
    pub fn validate(&self) -> Result<(), RobustnessError> {
        if !(self.error_threshold > 0.0 && self.inlier_threshold > 0.0) {
            return Err(RobustnessError::InvalidConfig("outlier thresholds must be positive".into()));
        }
        if self.min_sample != 2 {
            return Err(RobustnessError::InvalidConfig("min_sample must be 2".into()));
        }
        if self.ransac_iterations == 0 {
            return Err(RobustnessError::InvalidConfig("ransac_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult {
    pub pose: Pose2D,
    pub inliers: Vec<bool>,
}

impl RansacResult {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

fn cmp_pair(a: (&Point2, &Point2), b: (&Point2, &Point2)) -> Ordering {
    a.0.x
        .total_cmp(&b.0.x)
        .then(a.0.y.total_cmp(&b.0.y))
        .then(a.1.x.total_cmp(&b.1.x))
        .then(a.1.y.total_cmp(&b.1.y))
}

/// Best consensus over 2-point rigid hypotheses, refit on its inliers with Kabsch.
///
/// Every 2-subset is tried when there are at most `ransac_iterations` of them;
/// otherwise `ransac_iterations` subsets are drawn from the seeded stream.
/// Pairs are sorted canonically first, so the outcome does not depend on
/// input order.
pub fn ransac_pose(
    body: &[Point2],
    world: &[Point2],
    cfg: &OutlierConfig,
    seed: u64,
) -> Result<RansacResult, RobustnessError> {
    cfg.validate()?;
    let n = body.len().min(world.len());
    if body.len() != world.len() || n < 2 {
        return Err(RobustnessError::TooFewPairs(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| cmp_pair((&body[i], &world[i]), (&body[j], &world[j])));
    let b: Vec<Point2> = order.iter().map(|&i| body[i]).collect();
    let w: Vec<Point2> = order.iter().map(|&i| world[i]).collect();

    let subsets: Vec<(usize, usize)> = if n * (n - 1) / 2 <= cfg.ransac_iterations {
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    } else {
        let mut rng = rng::stream(seed, &[0x5A5A]);
        (0..cfg.ransac_iterations)
            .map(|_| {
                let i = rng.random_range(0..n);
                let j = (i + rng.random_range(1..n)) % n;
                (i.min(j), i.max(j))
            })
            .collect()
    };

    // (count, rms, mask)
    let mut best: Option<(usize, f64, Vec<bool>)> = None;
    let mut mask = vec![false; n];
    for (i, j) in subsets {
        if b[i].distance(&b[j]) <= f64::EPSILON {
            continue;
        }
        let pose = fit_rigid(&[b[i], b[j]], &[w[i], w[j]]);
        let mut count = 0;
        let mut ss = 0.0;
        for k in 0..n {
            let d = pose.transform_point(&b[k]).distance(&w[k]);
            mask[k] = d < cfg.inlier_threshold;
            if mask[k] {
                count += 1;
                ss += d * d;
            }
        }
        if count < 2 {
            continue;
        }
        let rms = (ss / count as f64).sqrt();
        let better = match &best {
            None => true,
            Some((c, r, _)) => count > *c || (count == *c && rms < *r),
        };
        if better {
            best = Some((count, rms, mask.clone()));
        }
    }

    let (_, _, sorted_mask) = best.ok_or(RobustnessError::NoConsensus)?;
    let (ib, iw): (Vec<Point2>, Vec<Point2>) =
        (0..n).filter(|&k| sorted_mask[k]).map(|k| (b[k], w[k])).unzip();
    let pose = PointPairSet::new(&ib, &iw)
        .and_then(|p| estimate_pose_kabsch(&p))
        .map_err(RegistrationError::from)?
        .pose;
    let mut inliers = vec![false; n];
    for (k, &orig) in order.iter().enumerate() {
        inliers[orig] = sorted_mask[k];
    }
    Ok(RansacResult { pose, inliers })
}

fn flagged(result: &RegistrationResult) -> RegistrationResult {
    RegistrationResult { low_confidence: true, ..result.clone() }
}

/// Checks a registration result and, if its mean matching error is too high,
/// removes outlying observations and refits.
pub fn drop_outliers(
    obs_body: &[(Point2, LandmarkClass)],
    result: &RegistrationResult,
    map: &FieldMap,
    cfg: &OutlierConfig,
) -> Result<RegistrationResult, RobustnessError> {
    cfg.validate()?;
    if result.mean_matching_error <= cfg.error_threshold {
        return Ok(result.clone());
    }
    if obs_body.len() < cfg.min_landmarks {
        return Ok(flagged(result));
    }

    let corr = &result.matching.correspondences;
    let body: Vec<Point2> = corr.iter().map(|c| obs_body[c.observation].0).collect();
    let world: Vec<Point2> = corr.iter().map(|c| map.landmarks()[c.landmark].position).collect();
    let ransac = match ransac_pose(&body, &world, cfg, cfg.seed) {
        Ok(r) => r,
        Err(RobustnessError::NoConsensus | RobustnessError::TooFewPairs(_)) => return Ok(flagged(result)),
        Err(e) => return Err(e),
    };

    let guess: Vec<(Point2, LandmarkClass)> =
        obs_body.iter().map(|(p, c)| (ransac.pose.transform_point(p), *c)).collect();
    let rematch = match_landmarks(&guess, map, MatchStrategy::ParallelBest).map_err(RegistrationError::from)?;
    let kept: Vec<Correspondence> =
        rematch.correspondences.iter().filter(|c| c.distance < cfg.inlier_threshold).copied().collect();
    if kept.len() < 2 {
        return Ok(flagged(result));
    }

    let src: Vec<Point2> = kept.iter().map(|c| obs_body[c.observation].0).collect();
    let dst: Vec<Point2> = kept.iter().map(|c| map.landmarks()[c.landmark].position).collect();
    let pose = match PointPairSet::new(&src, &dst).and_then(|p| estimate_pose_kabsch(&p)) {
        Ok(est) => est.pose,
        Err(_) => return Ok(flagged(result)),
    };
    let body_all: Vec<Point2> = obs_body.iter().map(|o| o.0).collect();
    let (mean, max) = matching_errors(&pose, &body_all, &kept, map);
    if mean > result.mean_matching_error {
        return Ok(flagged(result));
    }

    let dropped: Vec<usize> =
        (0..obs_body.len()).filter(|i| !kept.iter().any(|c| c.observation == *i)).collect();
    let matching = Matching::from_correspondences(
        kept,
        |i| obs_body[i].0,
        map,
        rematch.strategy_used,
        rematch.degraded_classes,
    );
    log::debug!("dropped {} outlier observation(s), mean error {:.3} -> {:.3}", dropped.len(), result.mean_matching_error, mean);
    Ok(RegistrationResult {
        pose,
        matching,
        mean_matching_error: mean,
        max_matching_error: max,
        low_confidence: false,
        dropped,
        ..result.clone()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSet {
    pub poses: Vec<Pose2D>,
    /// A frame qualifies when it holds at least this many observations.
    #[serde(default = "default_min_landmarks")]
    pub min_landmarks: usize,
    #[serde(default = "default_max_error")]
    pub max_error_threshold: f64,
}

fn default_min_landmarks() -> usize {
    6
}

fn default_max_error() -> f64 {
    0.5
}

impl HypothesisSet {
    /// Six poses evenly spaced along the own-half touch line at `y = -W/2`, facing into the field.
    pub fn default_for(map: &FieldMap) -> Self {
        let half = map.field_length() / 2.0;
        let poses = (0..6)
            .map(|i| {
                let x = -half + (i as f64 + 0.5) * half / 6.0;
                Pose2D::new(x, -map.field_width() / 2.0, std::f64::consts::FRAC_PI_2)
            })
            .collect();
        Self { poses, min_landmarks: default_min_landmarks(), max_error_threshold: default_max_error() }
    }

    pub fn validate(&self) -> Result<(), RobustnessError> {
        if self.poses.is_empty() {
            return Err(RobustnessError::InvalidConfig("hypothesis set is empty".into()));
        }
        if self.max_error_threshold.is_nan() || self.max_error_threshold <= 0.0 {
            return Err(RobustnessError::InvalidConfig("max_error_threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFix {
    pub pose: Pose2D,
    pub hypothesis: usize,
    pub frame: usize,
    pub result: RegistrationResult,
}

/// Runs ILM from every hypothesis on the first frame with enough landmarks
/// and keeps the lowest mean matching error among results whose maximum
/// error stays under the threshold. Ties go to the lower hypothesis index.
pub fn global_localize(
    frames: &[Vec<(Point2, LandmarkClass)>],
    map: &FieldMap,
    hyp: &HypothesisSet,
    cfg: &RegistrationConfig,
) -> Result<GlobalFix, RobustnessError> {
    hyp.validate()?;
    let frame = frames
        .iter()
        .position(|f| f.len() >= hyp.min_landmarks)
        .ok_or(RobustnessError::NoQualifyingFrame { min_landmarks: hyp.min_landmarks })?;
    let obs = &frames[frame];

    let results: Vec<Option<RegistrationResult>> = hyp
        .poses
        .par_iter()
        .map(|h| ilm_localize(obs, *h, map, cfg).ok().filter(|r| r.max_matching_error < hyp.max_error_threshold))
        .collect();

    let (hypothesis, result) = results
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .min_by(|a, b| a.1.mean_matching_error.total_cmp(&b.1.mean_matching_error).then(a.0.cmp(&b.0)))
        .ok_or(RobustnessError::AllHypothesesRejected { frame, threshold: hyp.max_error_threshold })?;
    Ok(GlobalFix { pose: result.pose, hypothesis, frame, result })
}
