//! Streaming localization pipelines over simulated trajectories.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ilm_core::field_map::FieldMap;
use ilm_core::fusion::{ekf_step, predict_state, NoiseModel, ParticleFilter, ParticleSet};
use ilm_core::geometry::{angle_diff, Pose2D};
use ilm_core::registration::{icp_localize, ilm_localize, RegistrationConfig};
use ilm_core::rng;
use ilm_core::robustness::{drop_outliers, global_localize, HypothesisSet, OutlierConfig, RobustnessError};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::amcl::{Amcl, AmclConfig};
use crate::simulator::{as_classed, as_points, SimFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrajectoryMethod {
    #[serde(rename = "ilm+pf")]
    IlmPf,
    #[serde(rename = "ilm+ekf")]
    IlmEkf,
    #[serde(rename = "ilm")]
    Ilm,
    #[serde(rename = "icp")]
    Icp,
    #[serde(rename = "dead-reckoning")]
    DeadReckoning,
    #[serde(rename = "amcl")]
    Amcl,
}

impl TrajectoryMethod {
    pub const ALL: [TrajectoryMethod; 6] = [
        TrajectoryMethod::IlmPf,
        TrajectoryMethod::IlmEkf,
        TrajectoryMethod::Ilm,
        TrajectoryMethod::Icp,
        TrajectoryMethod::DeadReckoning,
        TrajectoryMethod::Amcl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TrajectoryMethod::IlmPf => "ilm+pf",
            TrajectoryMethod::IlmEkf => "ilm+ekf",
            TrajectoryMethod::Ilm => "ilm",
            TrajectoryMethod::Icp => "icp",
            TrajectoryMethod::DeadReckoning => "dead-reckoning",
            TrajectoryMethod::Amcl => "amcl",
        }
    }
}

impl fmt::Display for TrajectoryMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TrajectoryMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pf" => Ok(TrajectoryMethod::IlmPf),
            "ekf" => Ok(TrajectoryMethod::IlmEkf),
            "dr" => Ok(TrajectoryMethod::DeadReckoning),
            _ => Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown method {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    /// Multi-hypothesis global localization on the first frames.
    Global,
    /// Start from the true pose of the first frame.
    #[default]
    Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub registration: RegistrationConfig,
    pub outlier: OutlierConfig,
    pub filter: NoiseModel,
    pub particles: usize,
    /// Uniform half-widths of the initial particle spread (m, m, rad).
    pub init_spread: [f64; 3],
    pub init: InitMode,
    /// Defaults to the touch-line hypotheses of the map when absent.
    pub hypotheses: Option<HypothesisSet>,
    pub amcl: AmclConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            registration: RegistrationConfig::default(),
            outlier: OutlierConfig::default(),
            filter: NoiseModel::default(),
            particles: 100,
            init_spread: [0.1, 0.1, 0.05],
            init: InitMode::Truth,
            hypotheses: None,
            amcl: AmclConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameEstimate {
    pub frame: usize,
    pub time: f64,
    pub truth: Pose2D,
    pub estimate: Pose2D,
    pub position_error: f64,
    /// Absolute wrapped heading error, radians.
    pub orientation_error: f64,
    /// Whether a landmark measurement entered the estimate at this frame.
    pub measured: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub position_rmse: f64,
    pub position_min: f64,
    pub position_max: f64,
    pub orientation_rmse_deg: f64,
    pub orientation_min_deg: f64,
    pub orientation_max_deg: f64,
}

impl ErrorStats {
    pub fn from_frames(frames: &[FrameEstimate]) -> Self {
        let n = frames.len().max(1) as f64;
        let rms = |f: &dyn Fn(&FrameEstimate) -> f64| (frames.iter().map(|e| f(e).powi(2)).sum::<f64>() / n).sqrt();
        let min = |f: &dyn Fn(&FrameEstimate) -> f64| frames.iter().map(f).fold(f64::INFINITY, f64::min);
        let max = |f: &dyn Fn(&FrameEstimate) -> f64| frames.iter().map(f).fold(0.0, f64::max);
        let pos = |e: &FrameEstimate| e.position_error;
        let ori = |e: &FrameEstimate| e.orientation_error.to_degrees();
        ErrorStats {
            position_rmse: rms(&pos),
            position_min: min(&pos),
            position_max: max(&pos),
            orientation_rmse_deg: rms(&ori),
            orientation_min_deg: min(&ori),
            orientation_max_deg: max(&ori),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub method: TrajectoryMethod,
    pub frames: usize,
    /// First frame with an estimate (where initialization succeeded).
    pub init_frame: usize,
    pub measurements: usize,
    pub overall: ErrorStats,
    /// Statistics over the last `final_window` frames.
    pub final_window: usize,
    pub last: ErrorStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRun {
    pub estimates: Vec<FrameEstimate>,
    pub summary: TrajectorySummary,
    /// Per-frame compute time in milliseconds, aligned with `estimates`.
    pub latency_ms: Vec<f64>,
}

impl TrajectoryRun {
    pub fn mean_latency_ms(&self) -> f64 {
        self.latency_ms.iter().sum::<f64>() / self.latency_ms.len().max(1) as f64
    }
}

/// First frame index and pose from which tracking can start.
pub fn initialize(
    frames: &[SimFrame],
    map: &FieldMap,
    cfg: &PipelineConfig,
) -> Result<(usize, Pose2D), ExperimentError> {
    match cfg.init {
        InitMode::Truth => Ok((0, frames[0].true_pose)),
        InitMode::Global => {
            let hyp = cfg.hypotheses.clone().unwrap_or_else(|| HypothesisSet::default_for(map));
            let classed: Vec<_> = frames.iter().map(|f| as_classed(&f.observations)).collect();
            let mut start = 0;
            while start < frames.len() {
                match global_localize(&classed[start..], map, &hyp, &cfg.registration) {
                    Ok(fix) => return Ok((start + fix.frame, fix.pose)),
                    Err(RobustnessError::AllHypothesesRejected { frame, .. }) => start += frame + 1,
                    Err(e) => return Err(e.into()),
                }
            }
            Err(ExperimentError::Invalid("global localization failed on every frame".into()))
        }
    }
}

fn frame_estimate(k: usize, f: &SimFrame, estimate: Pose2D, measured: bool) -> FrameEstimate {
    FrameEstimate {
        frame: k,
        time: f.time,
        truth: f.true_pose,
        estimate,
        position_error: estimate.translation().distance(&f.true_pose.translation()),
        orientation_error: angle_diff(estimate.theta(), f.true_pose.theta()).abs(),
        measured,
    }
}

/// Registration measurement for one frame, or `None` when it is unusable.
fn measure(method: TrajectoryMethod, f: &SimFrame, guess: Pose2D, map: &FieldMap, cfg: &PipelineConfig) -> Option<Pose2D> {
    if method == TrajectoryMethod::Icp {
        return icp_localize(&as_points(&f.observations), guess, map, &cfg.registration).ok().map(|r| r.pose);
    }
    let obs = as_classed(&f.observations);
    let r = ilm_localize(&obs, guess, map, &cfg.registration).ok()?;
    let r = drop_outliers(&obs, &r, map, &cfg.outlier).ok()?;
    (!r.low_confidence).then_some(r.pose)
}

/// Runs `method` over `frames` with time step `dt`. Dead reckoning starts from
/// the true first pose; every other pipeline starts from [`initialize`].
pub fn run_trajectory(
    method: TrajectoryMethod,
    frames: &[SimFrame],
    dt: f64,
    map: &FieldMap,
    cfg: &PipelineConfig,
    seed: u64,
    final_window: usize,
) -> Result<TrajectoryRun, ExperimentError> {
    if frames.is_empty() {
        return Err(ExperimentError::Invalid("no frames".into()));
    }
    if cfg.particles == 0 {
        return Err(ExperimentError::Invalid("particle count must be at least 1".into()));
    }
    cfg.registration.validate()?;
    cfg.outlier.validate()?;
    cfg.filter.validate()?;

    let (init_frame, start) = if method == TrajectoryMethod::DeadReckoning {
        (0, frames[0].true_pose)
    } else {
        initialize(frames, map, cfg)?
    };

    let mut estimates = Vec::with_capacity(frames.len() - init_frame);
    let mut latency_ms = Vec::with_capacity(frames.len() - init_frame);
    estimates.push(frame_estimate(init_frame, &frames[init_frame], start, method != TrajectoryMethod::DeadReckoning));
    latency_ms.push(0.0);

    let mut est = start;
    let mut pf = ParticleFilter::new(
        ParticleSet::around(&start, cfg.particles, cfg.init_spread, rng::derive_seed(seed, &[0x1A17])),
        cfg.filter,
        rng::derive_seed(seed, &[0x0F17]),
    );
    let mut cov = Matrix3::from_diagonal(&Vector3::from(cfg.init_spread.map(|s| (s * s).max(1e-12))));
    let mut amcl = match method {
        TrajectoryMethod::Amcl => Some(Amcl::new(&start, map, cfg.amcl, rng::derive_seed(seed, &[0xA3C1]))?),
        _ => None,
    };

    for (k, f) in frames.iter().enumerate().skip(init_frame + 1) {
        let t0 = Instant::now();
        let u = f.control;
        let guess = predict_state(&est, &u, dt);
        let mut measured = false;
        est = match method {
            TrajectoryMethod::DeadReckoning => guess,
            TrajectoryMethod::Ilm | TrajectoryMethod::Icp => match measure(method, f, guess, map, cfg) {
                Some(z) => {
                    measured = true;
                    z
                }
                None => guess,
            },
            TrajectoryMethod::IlmPf => {
                let z = measure(method, f, guess, map, cfg);
                measured = z.is_some();
                pf.step(&u, z.as_ref(), dt).estimate
            }
            TrajectoryMethod::IlmEkf => {
                let z = measure(method, f, guess, map, cfg);
                measured = z.is_some();
                let (m, c) = ekf_step(&est, &cov, &u, z.as_ref(), dt, &cfg.filter)?;
                cov = c;
                m
            }
            TrajectoryMethod::Amcl => {
                measured = !f.observations.is_empty();
                amcl.as_mut().expect("built for amcl").step(&u, &as_classed(&f.observations), dt)
            }
        };
        latency_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        estimates.push(frame_estimate(k, f, est, measured));
    }

    let window = final_window.clamp(1, estimates.len());
    let summary = TrajectorySummary {
        method,
        frames: estimates.len(),
        init_frame,
        measurements: estimates.iter().filter(|e| e.measured).count(),
        overall: ErrorStats::from_frames(&estimates),
        final_window: window,
        last: ErrorStats::from_frames(&estimates[estimates.len() - window..]),
    };
    Ok(TrajectoryRun { estimates, summary, latency_ms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{generate_trajectory, SensorModel, TrajectorySpec};
    use ilm_core::field_map::generate_default_map;

    fn one_lap(noisy: bool, seed: u64) -> (FieldMap, TrajectorySpec, Vec<SimFrame>) {
        let map = generate_default_map(14.0, 9.0).unwrap();
        let mut spec = TrajectorySpec::goal_box_rectangle(&map);
        spec.laps = 1;
        let (spec, sensor) = if noisy { (spec, SensorModel::noisy()) } else { (spec.noiseless(), SensorModel::default()) };
        let frames = generate_trajectory(&spec, &map, &sensor, seed).unwrap();
        (map, spec, frames)
    }

    #[test]
    fn zero_noise_ilm_is_exact() {
        let (map, spec, frames) = one_lap(false, 4);
        let run = run_trajectory(TrajectoryMethod::Ilm, &frames, spec.dt, &map, &PipelineConfig::default(), 4, 50).unwrap();
        assert_eq!(run.estimates.len(), frames.len());
        assert!(run.summary.overall.position_rmse <= 1e-6, "{:?}", run.summary);
        assert!(run.summary.overall.orientation_rmse_deg <= 1e-6);
    }

    #[test]
    fn zero_noise_dead_reckoning_is_exact() {
        let (map, spec, frames) = one_lap(false, 2);
        let run = run_trajectory(TrajectoryMethod::DeadReckoning, &frames, spec.dt, &map, &PipelineConfig::default(), 2, 50).unwrap();
        assert!(run.summary.overall.position_max <= 1e-9);
        assert_eq!(run.summary.measurements, 0);
    }

    #[test]
    fn fused_tracking_beats_dead_reckoning() {
        let (map, spec, frames) = one_lap(true, 11);
        let cfg = PipelineConfig::default();
        let pf = run_trajectory(TrajectoryMethod::IlmPf, &frames, spec.dt, &map, &cfg, 11, 100).unwrap();
        let dr = run_trajectory(TrajectoryMethod::DeadReckoning, &frames, spec.dt, &map, &cfg, 11, 100).unwrap();
        assert!(pf.summary.overall.position_rmse < 0.3, "{:?}", pf.summary);
        assert!(pf.summary.last.position_rmse < dr.summary.last.position_rmse);
        assert_eq!(pf.latency_ms.len(), pf.estimates.len());
    }

    #[test]
    fn runs_are_deterministic() {
        let (map, spec, frames) = one_lap(true, 5);
        let cfg = PipelineConfig::default();
        for m in [TrajectoryMethod::IlmPf, TrajectoryMethod::IlmEkf] {
            let a = run_trajectory(m, &frames[..300], spec.dt, &map, &cfg, 5, 10).unwrap();
            let b = run_trajectory(m, &frames[..300], spec.dt, &map, &cfg, 5, 10).unwrap();
            assert_eq!(a.estimates, b.estimates);
        }
    }

    #[test]
    fn error_stats_match_direct_computation() {
        let (map, spec, frames) = one_lap(true, 8);
        let run = run_trajectory(TrajectoryMethod::Ilm, &frames[..200], spec.dt, &map, &PipelineConfig::default(), 8, 20).unwrap();
        let e = &run.estimates;
        let mut sq = 0.0;
        let mut hi: f64 = 0.0;
        for f in e {
            let d = ((f.estimate.x() - f.truth.x()).powi(2) + (f.estimate.y() - f.truth.y()).powi(2)).sqrt();
            sq += d * d;
            hi = hi.max(d);
        }
        approx::assert_relative_eq!(run.summary.overall.position_rmse, (sq / e.len() as f64).sqrt(), max_relative = 1e-12);
        approx::assert_relative_eq!(run.summary.overall.position_max, hi, max_relative = 1e-12);
        assert_eq!(run.summary.last.position_max, e[180..].iter().map(|f| f.position_error).fold(0.0, f64::max));
    }

    #[test]
    fn rejects_bad_input() {
        let (map, spec, frames) = one_lap(false, 1);
        let cfg = PipelineConfig::default();
        assert!(run_trajectory(TrajectoryMethod::Ilm, &[], spec.dt, &map, &cfg, 0, 1).is_err());
        let zero = PipelineConfig { particles: 0, ..cfg };
        assert!(run_trajectory(TrajectoryMethod::IlmPf, &frames, spec.dt, &map, &zero, 0, 1).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in TrajectoryMethod::ALL {
            assert_eq!(m.name().parse::<TrajectoryMethod>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
        assert_eq!("pf".parse::<TrajectoryMethod>().unwrap(), TrajectoryMethod::IlmPf);
        assert!("mcl".parse::<TrajectoryMethod>().is_err());
    }
}
