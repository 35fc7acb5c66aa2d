//! Synthetic world: camera visibility, pose sampling and trajectory generation.

use std::f64::consts::PI;

use ilm_core::field_map::{FieldMap, LandmarkClass};
use ilm_core::fusion::ControlInput;
use ilm_core::geometry::{angle_diff, Point2, Pose2D};
use ilm_core::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid sensor model: {0}")]
    InvalidSensor(String),
    #[error("trajectory needs at least 2 waypoints, got {0}")]
    TooFewWaypoints(usize),
    #[error("trajectory has zero length")]
    ZeroLength,
    #[error("waypoint {index} at {point} lies outside the field")]
    OutsideField { index: usize, point: Point2 },
    #[error("invalid trajectory parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorModel {
    /// Full horizontal field of view, radians.
    pub fov: f64,
    pub max_range: f64,
    pub misclassification_rate: f64,
    /// Half-width of the uniform noise added to each body-frame coordinate.
    pub obs_noise_width: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self { fov: 110f64.to_radians(), max_range: 9.0, misclassification_rate: 0.0, obs_noise_width: 0.0 }
    }
}

impl SensorModel {
    /// Default camera with ±0.5 m observation noise.
    pub fn noisy() -> Self {
        Self { obs_noise_width: 0.5, ..Self::default() }
    }

    pub fn noiseless(&self) -> Self {
        Self { obs_noise_width: 0.0, misclassification_rate: 0.0, ..*self }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidSensor(m.into()));
        if !(self.fov > 0.0 && self.fov <= 2.0 * PI) {
            return bad("fov must lie in (0, 2π]");
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return bad("max_range must be positive");
        }
        if !(0.0..=1.0).contains(&self.misclassification_rate) {
            return bad("misclassification_rate must lie in [0, 1]");
        }
        if !(self.obs_noise_width >= 0.0 && self.obs_noise_width.is_finite()) {
            return bad("obs_noise_width must be nonnegative");
        }
        Ok(())
    }

    pub fn sees(&self, body: &Point2) -> bool {
        body.norm() <= self.max_range && body.y.atan2(body.x).abs() <= self.fov / 2.0
    }
}

/// A detected landmark in the body frame with its ground-truth identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimObservation {
    pub position: Point2,
    pub class: LandmarkClass,
    pub landmark_id: u32,
}

pub fn as_classed(obs: &[SimObservation]) -> Vec<(Point2, LandmarkClass)> {
    obs.iter().map(|o| (o.position, o.class)).collect()
}

pub fn as_points(obs: &[SimObservation]) -> Vec<Point2> {
    obs.iter().map(|o| o.position).collect()
}

/// `(observation index, landmark id)` pairs, the reference for correct matching.
pub fn ground_truth_pairs(obs: &[SimObservation]) -> Vec<(usize, u32)> {
    obs.iter().enumerate().map(|(i, o)| (i, o.landmark_id)).collect()
}

/// Landmarks inside the camera cone of `pose`, in map order. Each landmark
/// draws its noise and class flip from its own stream keyed by its id.
pub fn visible_landmarks(pose: &Pose2D, map: &FieldMap, sensor: &SensorModel, seed: u64) -> Vec<SimObservation> {
    let w = sensor.obs_noise_width;
    map.landmarks()
        .iter()
        .filter_map(|l| {
            let exact = pose.inverse_transform_point(&l.position);
            if !sensor.sees(&exact) {
                return None;
            }
            let mut r = rng::stream(seed, &[u64::from(l.id)]);
            let position = if w > 0.0 {
                exact + Point2::new(r.random_range(-w..=w), r.random_range(-w..=w))
            } else {
                exact
            };
            let mut class = l.class;
            if sensor.misclassification_rate > 0.0 && r.random::<f64>() < sensor.misclassification_rate {
                let others: Vec<LandmarkClass> = LandmarkClass::ALL.into_iter().filter(|c| *c != l.class).collect();
                class = others[r.random_range(0..others.len())];
            }
            Some(SimObservation { position, class, landmark_id: l.id })
        })
        .collect()
}

/// Uniform over the field rectangle and heading; sample `i` depends only on `(seed, i)`.
pub fn sample_pose(map: &FieldMap, seed: u64, i: u64) -> Pose2D {
    let mut r = rng::stream(seed, &[0x9053, i]);
    let (hl, hw) = (map.field_length() / 2.0, map.field_width() / 2.0);
    Pose2D::new(r.random_range(-hl..=hl), r.random_range(-hw..=hw), r.random_range(-PI..PI))
}

pub fn sample_poses(n: usize, map: &FieldMap, seed: u64) -> Vec<Pose2D> {
    (0..n as u64).map(|i| sample_pose(map, seed, i)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    /// Vertices of a closed polygon, visited in order and back to the first.
    pub waypoints: Vec<Point2>,
    pub speed: f64,
    pub dt: f64,
    /// Half-width of the uniform position perturbation per step, meters.
    pub odom_pos_noise: f64,
    /// Half-width of the uniform heading perturbation per step, radians.
    pub odom_ang_noise: f64,
    pub laps: usize,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            waypoints: vec![Point2::new(-6.0, -2.0), Point2::new(-6.0, 2.0), Point2::new(-7.0, 2.0), Point2::new(-7.0, -2.0)],
            speed: 1.0,
            dt: 0.01,
            odom_pos_noise: 0.02,
            odom_ang_noise: 0.02,
            laps: 5,
        }
    }
}

impl TrajectorySpec {
    /// Loop over the four corners of the own goal area.
    pub fn goal_box_rectangle(map: &FieldMap) -> Self {
        let mut corners: Vec<Point2> = map
            .landmarks()
            .iter()
            .filter(|l| l.class == LandmarkClass::Corner && l.position.x < 0.0)
            .map(|l| l.position)
            .filter(|p| p.x > -map.field_length() / 2.0 && p.y.abs() < map.field_width() / 2.0)
            .collect();
        // Goal-area corners are the inner rectangle closest to the goal line.
        corners.sort_by(|a, b| a.y.abs().total_cmp(&b.y.abs()).then(a.x.total_cmp(&b.x)));
        let mut spec = Self::default();
        if corners.len() >= 2 {
            let inner = corners[0].y.abs();
            let x_in = corners.iter().filter(|p| (p.y.abs() - inner).abs() < 1e-9).map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
            let x_out = -map.field_length() / 2.0;
            spec.waypoints = vec![
                Point2::new(x_in, -inner),
                Point2::new(x_in, inner),
                Point2::new(x_out, inner),
                Point2::new(x_out, -inner),
            ];
        }
        spec
    }

    pub fn noiseless(&self) -> Self {
        Self { odom_pos_noise: 0.0, odom_ang_noise: 0.0, ..self.clone() }
    }

    pub fn validate(&self, map: &FieldMap) -> Result<(), SimError> {
        if self.waypoints.len() < 2 {
            return Err(SimError::TooFewWaypoints(self.waypoints.len()));
        }
        let (hl, hw) = (map.field_length() / 2.0, map.field_width() / 2.0);
        for (index, p) in self.waypoints.iter().enumerate() {
            if !(p.is_finite() && p.x.abs() <= hl + 1e-9 && p.y.abs() <= hw + 1e-9) {
                return Err(SimError::OutsideField { index, point: *p });
            }
        }
        if self.lap_length() <= 1e-9 {
            return Err(SimError::ZeroLength);
        }
        let bad = |m: &str| Err(SimError::InvalidParameter(m.into()));
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return bad("speed must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.odom_pos_noise >= 0.0 && self.odom_ang_noise >= 0.0) {
            return bad("odometry noise must be nonnegative");
        }
        if self.laps == 0 {
            return bad("laps must be at least 1");
        }
        Ok(())
    }

    fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.waypoints.len();
        (0..n).map(move |i| (self.waypoints[i], self.waypoints[(i + 1) % n]))
    }

    pub fn lap_length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(&b)).sum()
    }

    pub fn steps_per_lap(&self) -> usize {
        ((self.lap_length() / (self.speed * self.dt)).round() as usize).max(1)
    }

    /// Pose at arc length `s ∈ [0, lap_length)`, heading along the segment.
    fn pose_at(&self, mut s: f64) -> Pose2D {
        let segs: Vec<(Point2, Point2)> = self.segments().filter(|(a, b)| a.distance(b) > 1e-12).collect();
        for (a, b) in &segs {
            let len = a.distance(b);
            if s < len {
                let d = *b - *a;
                return Pose2D::new(a.x + d.x * s / len, a.y + d.y * s / len, d.y.atan2(d.x));
            }
            s -= len;
        }
        let (a, b) = segs[0];
        Pose2D::new(a.x, a.y, (b - a).y.atan2((b - a).x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFrame {
    pub time: f64,
    pub true_pose: Pose2D,
    pub observations: Vec<SimObservation>,
    /// Noisy odometry over the interval ending at this frame; zero for the first frame.
    pub control: ControlInput,
}

/// Constant-speed laps around the waypoint polygon. Controls are the exact
/// body-frame displacement rates plus uniform noise, so integrating noiseless
/// controls with the dynamics model reproduces the true poses.
pub fn generate_trajectory(
    spec: &TrajectorySpec,
    map: &FieldMap,
    sensor: &SensorModel,
    seed: u64,
) -> Result<Vec<SimFrame>, SimError> {
    spec.validate(map)?;
    sensor.validate()?;
    let per_lap = spec.steps_per_lap();
    let total = per_lap * spec.laps;
    let lap = spec.lap_length();
    let poses: Vec<Pose2D> =
        (0..=total).map(|k| spec.pose_at(lap * (k % per_lap) as f64 / per_lap as f64)).collect();

    let frames = (0..=total)
        .map(|k| {
            let pose = poses[k];
            let control = if k == 0 {
                ControlInput::ZERO
            } else {
                let prev = poses[k - 1];
                let d = prev.inverse_transform_point(&pose.translation());
                let mut r = rng::stream(seed, &[0x0D0, k as u64]);
                let mut jitter = |w: f64| if w > 0.0 { r.random_range(-w..=w) } else { 0.0 };
                let (nf, ns, nw) = (jitter(spec.odom_pos_noise), jitter(spec.odom_pos_noise), jitter(spec.odom_ang_noise));
                ControlInput::new(
                    (d.x + nf) / spec.dt,
                    (d.y + ns) / spec.dt,
                    (angle_diff(pose.theta(), prev.theta()) + nw) / spec.dt,
                )
            };
            let obs_seed = rng::derive_seed(seed, &[0x0B5, k as u64]);
            SimFrame {
                time: k as f64 * spec.dt,
                true_pose: pose,
                observations: visible_landmarks(&pose, map, sensor, obs_seed),
                control,
            }
        })
        .collect();
    Ok(frames)
}
