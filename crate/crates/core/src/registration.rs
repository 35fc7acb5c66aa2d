//! Iterative landmark matching and the point-to-point ICP baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{match_landmarks, AssignmentError, Correspondence, MatchStrategy, Matching};
use crate::field_map::{FieldMap, LandmarkClass};
use crate::geometry::{angle_diff, Point2, Pose2D};
use crate::pose_estimation::{estimate_pose, EstimationError, Estimator, PointPairSet, MIN_PAIRS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistrationError {
    #[error("insufficient landmarks: {found} observed, at least {MIN_PAIRS} required")]
    InsufficientLandmarks { found: usize },
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error("invalid registration config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationConfig {
    pub max_iteration: usize,
    pub convergence_tol_pos: f64,
    pub convergence_tol_ang: f64,
    pub estimator: Estimator,
    pub strategy: MatchStrategy,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            max_iteration: 4,
            convergence_tol_pos: 1e-6,
            convergence_tol_ang: 1e-6,
            estimator: Estimator::Kabsch,
            strategy: MatchStrategy::ParallelBest,
        }
    }
}

impl RegistrationConfig {
    pub fn with_max_iteration(mut self, n: usize) -> Self {
        self.max_iteration = n;
        self
    }

    pub fn validate(&self) -> Result<(), RegistrationError> {
        if self.max_iteration < 1 {
            return Err(RegistrationError::InvalidConfig("max_iteration must be at least 1".into()));
        }
        let tols = [self.convergence_tol_pos, self.convergence_tol_ang];
        if tols.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(RegistrationError::InvalidConfig("tolerances must be finite and nonnegative".into()));
        }
        Ok(())
    }

    fn settled(&self, prev: &Pose2D, next: &Pose2D) -> bool {
        prev.translation().distance(&next.translation()) <= self.convergence_tol_pos
            && angle_diff(next.theta(), prev.theta()).abs() <= self.convergence_tol_ang
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub pose: Pose2D,
    pub mean_matching_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    pub pose: Pose2D,
    /// Correspondences the returned pose was fitted to.
    pub matching: Matching,
    pub iterations: usize,
    pub converged: bool,
    /// Mean distance between the observations projected with `pose` and their matched landmarks.
    pub mean_matching_error: f64,
    pub max_matching_error: f64,
    /// Set by outlier handling when the result could not be verified.
    pub low_confidence: bool,
    /// Observation indices excluded as outliers.
    pub dropped: Vec<usize>,
    pub trace: Vec<IterationTrace>,
}

impl RegistrationResult {
    pub fn matched_pairs(&self) -> Vec<(usize, u32)> {
        self.matching.pairs()
    }
}

/// Mean and max distance between `pose·body[obs]` and the matched landmark positions.
pub fn matching_errors(pose: &Pose2D, body: &[Point2], corr: &[Correspondence], map: &FieldMap) -> (f64, f64) {
    if corr.is_empty() {
        return (0.0, 0.0);
    }
    let (sum, max) = corr.iter().fold((0.0, 0.0f64), |(s, m), c| {
        let d = pose.transform_point(&body[c.observation]).distance(&map.landmarks()[c.landmark].position);
        (s + d, m.max(d))
    });
    (sum / corr.len() as f64, max)
}

fn fit(
    body: &[Point2],
    corr: &[Correspondence],
    map: &FieldMap,
    estimator: Estimator,
) -> Result<Pose2D, RegistrationError> {
    let src: Vec<Point2> = corr.iter().map(|c| body[c.observation]).collect();
    let dst: Vec<Point2> = corr.iter().map(|c| map.landmarks()[c.landmark].position).collect();
    let pairs = PointPairSet::new(&src, &dst)?;
    Ok(estimate_pose(&pairs, estimator)?.pose)
}

/// Shared match/estimate loop; `associate` maps guessed world points to a matching.
fn iterate<F>(
    body: &[Point2],
    initial: Pose2D,
    map: &FieldMap,
    cfg: &RegistrationConfig,
    estimator: Estimator,
    mut associate: F,
) -> Result<RegistrationResult, RegistrationError>
where
    F: FnMut(&[Point2]) -> Result<Matching, RegistrationError>,
{
    cfg.validate()?;
    if body.len() < MIN_PAIRS {
        return Err(RegistrationError::InsufficientLandmarks { found: body.len() });
    }
    let mut pose = initial;
    let mut trace = Vec::with_capacity(cfg.max_iteration);
    let mut converged = false;
    let mut matching = None;
    let mut guess = Vec::with_capacity(body.len());

    for _ in 0..cfg.max_iteration {
        guess.clear();
        guess.extend(body.iter().map(|p| pose.transform_point(p)));
        let m = associate(&guess)?;
        if m.len() < MIN_PAIRS {
            return Err(RegistrationError::InsufficientLandmarks { found: m.len() });
        }
        let next = fit(body, &m.correspondences, map, estimator)?;
        let (mean, _) = matching_errors(&next, body, &m.correspondences, map);
        trace.push(IterationTrace { pose: next, mean_matching_error: mean });
        converged = cfg.settled(&pose, &next);
        pose = next;
        matching = Some(m);
        if converged {
            break;
        }
    }

    let matching = matching.expect("max_iteration >= 1");
    let (mean, max) = matching_errors(&pose, body, &matching.correspondences, map);
    Ok(RegistrationResult {
        pose,
        matching,
        iterations: trace.len(),
        converged,
        mean_matching_error: mean,
        max_matching_error: max,
        low_confidence: false,
        dropped: Vec::new(),
        trace,
    })
}

/// Iterative landmark matching from an initial pose guess.
pub fn ilm_localize(
    obs_body: &[(Point2, LandmarkClass)],
    initial: Pose2D,
    map: &FieldMap,
    cfg: &RegistrationConfig,
) -> Result<RegistrationResult, RegistrationError> {
    let body: Vec<Point2> = obs_body.iter().map(|o| o.0).collect();
    let mut classed = Vec::with_capacity(obs_body.len());
    iterate(&body, initial, map, cfg, cfg.estimator, |guess| {
        classed.clear();
        classed.extend(guess.iter().zip(obs_body).map(|(g, o)| (*g, o.1)));
        Ok(match_landmarks(&classed, map, cfg.strategy)?)
    })
}

/// Class-agnostic nearest landmark; several observations may share one.
pub fn nearest_neighbors(guess: &[Point2], map: &FieldMap) -> Vec<Correspondence> {
    guess
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let (landmark, distance) = map
                .landmarks()
                .iter()
                .map(|l| g.distance(&l.position))
                .enumerate()
                .fold((0, f64::INFINITY), |best, (j, d)| if d < best.1 { (j, d) } else { best });
            Correspondence { observation: i, landmark, landmark_id: map.landmarks()[landmark].id, distance }
        })
        .collect()
}

/// Point-to-point ICP with nearest-neighbor association and Kabsch updates.
pub fn icp_localize(
    obs_body: &[Point2],
    initial: Pose2D,
    map: &FieldMap,
    cfg: &RegistrationConfig,
) -> Result<RegistrationResult, RegistrationError> {
    iterate(obs_body, initial, map, cfg, Estimator::Kabsch, |guess| {
        let corr = nearest_neighbors(guess, map);
        Ok(Matching::from_correspondences(corr, |i| guess[i], map, MatchStrategy::Identical, Vec::new()))
    })
}
