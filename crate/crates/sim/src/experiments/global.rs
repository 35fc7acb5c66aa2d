//! Start-of-match global localization from the touch-line hypotheses.

use ilm_core::field_map::FieldMap;
use ilm_core::geometry::{pose_error, Pose2D};
use ilm_core::registration::RegistrationConfig;
use ilm_core::rng;
use ilm_core::robustness::{global_localize, HypothesisSet};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::simulator::{as_classed, visible_landmarks, SensorModel};

/// Pose agreement, in meters and radians, for counting a fix as correct.
pub const FIX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalTrial {
    pub trial: usize,
    pub truth: Pose2D,
    pub visible: usize,
    /// `None` when every hypothesis was rejected on every frame.
    pub estimate: Option<Pose2D>,
    pub hypothesis: Option<usize>,
    pub frame: Option<usize>,
    pub position_error: f64,
    pub orientation_error: f64,
    pub correct: bool,
    /// The fix is the 180° field-rotation twin of the truth.
    pub twin: bool,
}

impl GlobalTrial {
    pub fn resolved(&self) -> bool {
        self.correct || self.twin
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalTrialConfig {
    pub trials: usize,
    /// Frames observed from the start pose; later ones are used only if earlier ones are rejected.
    pub frames: usize,
    /// Uniform half-width of the start offset along the touch line, meters.
    pub along: f64,
    /// Maximum start offset into the field, meters.
    pub inward: f64,
    /// Uniform half-width of the heading offset, radians.
    pub heading: f64,
}

impl Default for GlobalTrialConfig {
    fn default() -> Self {
        Self { trials: 120, frames: 3, along: 0.4, inward: 0.3, heading: 0.1 }
    }
}

/// Perturbed start poses around the hypotheses (trial `i` starts near
/// hypothesis `i mod n`), each localized from scratch.
pub fn global_init_trials(
    cfg: &GlobalTrialConfig,
    map: &FieldMap,
    sensor: &SensorModel,
    hyp: &HypothesisSet,
    reg: &RegistrationConfig,
    seed: u64,
) -> Result<Vec<GlobalTrial>, ExperimentError> {
    if cfg.trials == 0 || cfg.frames == 0 {
        return Err(ExperimentError::Invalid("trials and frames must be positive".into()));
    }
    if [cfg.along, cfg.inward, cfg.heading].iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(ExperimentError::Invalid("start offsets must be finite and nonnegative".into()));
    }
    sensor.validate()?;
    hyp.validate()?;
    reg.validate()?;
    let (hl, hw) = (map.field_length() / 2.0, map.field_width() / 2.0);
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, &[0x610B, i as u64]);
            let h = hyp.poses[i % hyp.poses.len()];
            let mut draw = |w: f64| if w > 0.0 { r.random_range(-w..=w) } else { 0.0 };
            let (dx, dy, dt) = (draw(cfg.along), draw(cfg.inward / 2.0) + cfg.inward / 2.0, draw(cfg.heading));
            // dx sideways along the touch line, dy forward into the field
            let (s, c) = h.theta().sin_cos();
            let truth = Pose2D::new(
                (h.x() - dx * s + dy * c).clamp(-hl, hl),
                (h.y() + dx * c + dy * s).clamp(-hw, hw),
                h.theta() + dt,
            );
            let frames: Vec<_> = (0..cfg.frames)
                .map(|k| as_classed(&visible_landmarks(&truth, map, sensor, rng::derive_seed(seed, &[0x610F, i as u64, k as u64]))))
                .collect();
            let visible = frames[0].len();
            let fix = global_localize(&frames, map, hyp, reg).ok();
            let err = fix.as_ref().map(|f| pose_error(&f.pose, &truth));
            let twin = fix.as_ref().map(|f| pose_error(&f.pose, &truth.point_reflected()));
            let within = |e: Option<ilm_core::geometry::PoseError>| e.is_some_and(|e| e.position < FIX_TOLERANCE && e.orientation < FIX_TOLERANCE);
            GlobalTrial {
                trial: i,
                truth,
                visible,
                estimate: fix.as_ref().map(|f| f.pose),
                hypothesis: fix.as_ref().map(|f| f.hypothesis),
                frame: fix.as_ref().map(|f| f.frame),
                position_error: err.map_or(f64::NAN, |e| e.position),
                orientation_error: err.map_or(f64::NAN, |e| e.orientation),
                correct: within(err),
                twin: within(twin),
            }
        })
        .collect())
}
