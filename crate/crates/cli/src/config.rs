//! Run configuration: TOML file merged under command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ilm_core::field_map::{generate_default_map, load_map, FieldMap};
use ilm_core::fusion::NoiseModel;
use ilm_core::registration::RegistrationConfig;
use ilm_core::robustness::{HypothesisSet, OutlierConfig};
use ilm_sim::amcl::AmclConfig;
use ilm_sim::experiments::global::GlobalTrialConfig;
use ilm_sim::experiments::trajectory::InitMode;
use ilm_sim::{SensorModel, TrajectorySpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DEFAULT_FIELD_LENGTH: f64 = 14.0;
pub const DEFAULT_FIELD_WIDTH: f64 = 9.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Map file; the generated default field when absent.
    pub map: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
    /// Sensor for the static experiments (heatmaps, rates, benches, global init).
    pub sensor: SensorModel,
    /// Sensor for trajectory runs.
    pub trajectory_sensor: SensorModel,
    pub registration: RegistrationConfig,
    pub outlier: OutlierConfig,
    pub filter: NoiseModel,
    pub amcl: AmclConfig,
    pub hypotheses: Option<HypothesisSet>,
    pub trajectory: TrajectorySpec,
    pub pipeline: PipelineSettings,
    pub global_init: GlobalTrialConfig,
    pub experiment: ExperimentParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            map: None,
            seed: 0,
            out: PathBuf::from("out"),
            sensor: SensorModel::default(),
            trajectory_sensor: SensorModel::noisy(),
            registration: RegistrationConfig::default(),
            outlier: OutlierConfig::default(),
            filter: NoiseModel::default(),
            amcl: AmclConfig::default(),
            hypotheses: None,
            trajectory: TrajectorySpec::default(),
            pipeline: PipelineSettings::default(),
            global_init: GlobalTrialConfig::default(),
            experiment: ExperimentParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub particles: usize,
    pub init_spread: [f64; 3],
    pub init: InitMode,
    /// Frames in the end-of-run statistics window.
    pub final_window: usize,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        Self { particles: 100, init_spread: [0.1, 0.1, 0.05], init: InitMode::Truth, final_window: 100 }
    }
}

/// Experiment sizes. Unset values fall back to the desk-scale or full-scale defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub samples: Option<usize>,
    pub warmup: Option<usize>,
    pub resolution: Option<f64>,
    pub initial_theta: Option<f64>,
    pub max_iter: Option<Vec<usize>>,
    pub pose_samples: Option<usize>,
    pub position_offsets: Option<Vec<f64>>,
    pub angle_offsets_deg: Option<Vec<f64>>,
    pub rate_max_iter: Option<usize>,
    pub min_observations: Option<usize>,
    pub noise_widths: Option<Vec<f64>>,
    pub noise_poses: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scale {
    pub samples: usize,
    pub noise_poses: usize,
    pub pose_samples: usize,
    pub resolution: f64,
}

impl Scale {
    pub const DESK: Scale = Scale { samples: 10_000, noise_poses: 10_000, pose_samples: 200, resolution: 0.25 };
    pub const FULL: Scale = Scale { samples: 100_000, noise_poses: 100_000, pose_samples: 1_000, resolution: 0.1 };

    pub fn pick(full: bool) -> Scale {
        if full {
            Scale::FULL
        } else {
            Scale::DESK
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config file {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.sensor.validate().context("[sensor]")?;
        self.trajectory_sensor.validate().context("[trajectory_sensor]")?;
        self.registration.validate().context("[registration]")?;
        self.outlier.validate().context("[outlier]")?;
        self.filter.validate().context("[filter]")?;
        self.amcl.validate().context("[amcl]")?;
        if let Some(h) = &self.hypotheses {
            h.validate().context("[hypotheses]")?;
        }
        if self.pipeline.particles == 0 {
            bail!("[pipeline] particles must be at least 1");
        }
        if self.pipeline.init_spread.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            bail!("[pipeline] init_spread must be finite and nonnegative");
        }
        let e = &self.experiment;
        if e.samples == Some(0) || e.pose_samples == Some(0) || e.noise_poses == Some(0) {
            bail!("[experiment] sample counts must be at least 1");
        }
        if e.resolution.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
            bail!("[experiment] resolution must be positive");
        }
        if e.max_iter.as_ref().is_some_and(|v| v.is_empty() || v.contains(&0)) || e.rate_max_iter == Some(0) {
            bail!("[experiment] iteration budgets must be at least 1");
        }
        Ok(())
    }

    pub fn load_map(&self) -> anyhow::Result<FieldMap> {
        match &self.map {
            Some(p) => Ok(load_map(p)?),
            None => Ok(generate_default_map(DEFAULT_FIELD_LENGTH, DEFAULT_FIELD_WIDTH)?),
        }
    }

    pub fn hypotheses(&self, map: &FieldMap) -> HypothesisSet {
        self.hypotheses.clone().unwrap_or_else(|| HypothesisSet::default_for(map))
    }

    /// SHA-256 over the resolved configuration and the map contents. The
    /// output directory does not enter the hash.
    pub fn hash(&self, map: &FieldMap) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.map = None;
        let mut h = Sha256::new();
        h.update(serde_json::to_string(&c).expect("config serializes").as_bytes());
        h.update(map.to_toml_string().as_bytes());
        hex::encode(h.finalize())
    }
}
