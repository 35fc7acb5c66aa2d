//! Wall-clock benchmarks of the LAP solvers, pose estimators and ILM.
//!
//! Each benchmark returns deterministic per-instance rows (what was solved and
//! the validated result) separately from the timing records, so the former
//! can be compared byte-for-byte across runs.

use std::hint::black_box;
use std::time::Instant;

use ilm_core::assignment::{build_cost_matrix, LapSolver};
use ilm_core::field_map::FieldMap;
use ilm_core::geometry::{Point2, Pose2D};
use ilm_core::pose_estimation::{estimate_pose, Estimator, PointPairSet};
use ilm_core::registration::{ilm_localize, RegistrationConfig};
use ilm_core::rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::simulator::{as_classed, sample_pose, visible_landmarks, SensorModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub method: String,
    pub samples: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
}

impl BenchRecord {
    pub fn from_durations(method: &str, mut ms: Vec<f64>) -> Self {
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let pick = |q: f64| if n == 0 { f64::NAN } else { ms[((q * (n - 1) as f64).round() as usize).min(n - 1)] };
        BenchRecord {
            method: method.to_string(),
            samples: n,
            mean_ms: if n == 0 { f64::NAN } else { ms.iter().sum::<f64>() / n as f64 },
            median_ms: pick(0.5),
            p99_ms: pick(0.99),
        }
    }
}

/// One matching instance of the solver benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapInstance {
    pub index: usize,
    pub pose: Pose2D,
    pub observations: usize,
    pub landmarks: usize,
    pub optimal_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LapBench {
    pub instances: Vec<LapInstance>,
    pub records: Vec<BenchRecord>,
}

fn time_ms<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = black_box(f());
    (out, t.elapsed().as_secs_f64() * 1e3)
}

/// Builds the class-agnostic cost matrix of observed landmarks against the
/// whole map at uniformly sampled poses and times every solver on it.
/// Instances with no visible landmark are skipped; the first `warmup`
/// instances are solved but not timed.
pub fn bench_lap_solvers(
    n_samples: usize,
    map: &FieldMap,
    sensor: &SensorModel,
    seed: u64,
    warmup: usize,
) -> Result<LapBench, ExperimentError> {
    if n_samples == 0 {
        return Err(ExperimentError::Invalid("sample count must be positive".into()));
    }
    sensor.validate()?;
    let mut instances = Vec::with_capacity(n_samples);
    let mut times: [Vec<f64>; 3] = Default::default();
    let mut drawn = 0u64;
    while instances.len() < n_samples {
        let pose = sample_pose(map, seed, drawn);
        let obs = visible_landmarks(&pose, map, sensor, rng::derive_seed(seed, &[drawn]));
        drawn += 1;
        if obs.is_empty() {
            continue;
        }
        let guess: Vec<Point2> = obs.iter().map(|o| pose.transform_point(&o.position)).collect();
        let cost = build_cost_matrix(&guess, map.landmarks()).map_err(|e| ExperimentError::Invalid(e.to_string()))?;

        let k = instances.len();
        let mut costs = [0.0; 3];
        for j in 0..3 {
            // rotate the order so no solver always runs cold
            let s = (j + k) % 3;
            let (a, ms) = time_ms(|| LapSolver::ALL[s].solve(&cost));
            let a = a.map_err(|e| ExperimentError::Invalid(e.to_string()))?;
            costs[s] = a.total_cost;
            if k >= warmup {
                times[s].push(ms);
            }
        }
        let tol = 1e-9 * costs[0].abs().max(1.0);
        if costs.iter().any(|c| (c - costs[0]).abs() > tol) {
            return Err(ExperimentError::Validation(format!("solvers disagree on instance {k}: {costs:?}")));
        }
        instances.push(LapInstance { index: k, pose, observations: obs.len(), landmarks: map.len(), optimal_cost: costs[0] });
    }
    let records = LapSolver::ALL
        .iter()
        .zip(times)
        .map(|(s, t)| BenchRecord::from_durations(s.name(), t))
        .collect();
    Ok(LapBench { instances, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseInstance {
    pub index: usize,
    pub pose: Pose2D,
    pub observations: usize,
    pub dlt_position_error: f64,
    pub kabsch_position_error: f64,
    pub ilm_dlt_correct: bool,
    pub ilm_kabsch_correct: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseBench {
    pub instances: Vec<PoseInstance>,
    pub records: Vec<BenchRecord>,
}

/// Times DLT and Kabsch on ground-truth correspondences, and ILM with either
/// estimator from a perturbed initial guess, at `max_iteration`.
pub fn bench_pose_estimation(
    n_samples: usize,
    map: &FieldMap,
    sensor: &SensorModel,
    reg: &RegistrationConfig,
    seed: u64,
    warmup: usize,
) -> Result<PoseBench, ExperimentError> {
    if n_samples == 0 {
        return Err(ExperimentError::Invalid("sample count must be positive".into()));
    }
    sensor.validate()?;
    reg.validate()?;
    let mut instances = Vec::with_capacity(n_samples);
    let mut times: [Vec<f64>; 4] = Default::default();
    let mut drawn = 0u64;
    while instances.len() < n_samples {
        let pose = sample_pose(map, seed, drawn);
        let obs = visible_landmarks(&pose, map, sensor, rng::derive_seed(seed, &[drawn]));
        let mut r = rng::stream(seed, &[0xBE7C, drawn]);
        drawn += 1;
        if obs.len() < 3 {
            continue;
        }
        let body: Vec<Point2> = obs.iter().map(|o| o.position).collect();
        let world: Vec<Point2> =
            obs.iter().map(|o| map.landmark_by_id(o.landmark_id).expect("observed id is on the map").position).collect();
        let pairs = PointPairSet::new(&body, &world).map_err(ilm_core::registration::RegistrationError::from)?;
        let classed = as_classed(&obs);
        let initial = Pose2D::new(
            pose.x() + r.random_range(-0.5..0.5),
            pose.y() + r.random_range(-0.5..0.5),
            pose.theta() + r.random_range(-0.2..0.2),
        );
        let k = instances.len();

        let (dlt, t_dlt) = time_ms(|| estimate_pose(&pairs, Estimator::Dlt));
        let (kab, t_kab) = time_ms(|| estimate_pose(&pairs, Estimator::Kabsch));
        let cfg_dlt = RegistrationConfig { estimator: Estimator::Dlt, ..*reg };
        let cfg_kab = RegistrationConfig { estimator: Estimator::Kabsch, ..*reg };
        let (ilm_dlt, t_ilm_dlt) = time_ms(|| ilm_localize(&classed, initial, map, &cfg_dlt));
        let (ilm_kab, t_ilm_kab) = time_ms(|| ilm_localize(&classed, initial, map, &cfg_kab));
        if k >= warmup {
            for (v, t) in times.iter_mut().zip([t_dlt, t_kab, t_ilm_dlt, t_ilm_kab]) {
                v.push(t);
            }
        }
        let truth_pairs: Vec<(usize, u32)> = obs.iter().enumerate().map(|(i, o)| (i, o.landmark_id)).collect();
        let dlt = dlt.map_err(ilm_core::registration::RegistrationError::from)?;
        let kab = kab.map_err(ilm_core::registration::RegistrationError::from)?;
        instances.push(PoseInstance {
            index: k,
            pose,
            observations: obs.len(),
            dlt_position_error: dlt.pose.translation().distance(&pose.translation()),
            kabsch_position_error: kab.pose.translation().distance(&pose.translation()),
            ilm_dlt_correct: ilm_dlt.is_ok_and(|r| r.matched_pairs() == truth_pairs),
            ilm_kabsch_correct: ilm_kab.is_ok_and(|r| r.matched_pairs() == truth_pairs),
        });
    }
    let names = ["dlt", "kabsch", "ilm_dlt", "ilm_kabsch"];
    let records = names.iter().zip(times).map(|(n, t)| BenchRecord::from_durations(n, t)).collect();
    Ok(PoseBench { instances, records })
}
