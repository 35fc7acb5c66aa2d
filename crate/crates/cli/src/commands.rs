use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _};
use ilm_core::assignment::MatchStrategy;
use ilm_core::field_map::{generate_default_map, FieldMap, LandmarkClass};
use ilm_core::geometry::Pose2D;
use ilm_core::robustness::global_localize;
use ilm_sim::experiments::bench::{bench_lap_solvers, bench_pose_estimation, BenchRecord};
use ilm_sim::experiments::global::{global_init_trials, GlobalTrial};
use ilm_sim::experiments::heatmap::{
    heatmap, matching_rate_surfaces, random_orientation_rate, HeatmapConfig, RateConfig, RegistrationMethod,
};
use ilm_sim::experiments::noise::sweep_pose_noise;
use ilm_sim::experiments::trajectory::{run_trajectory, FrameEstimate, PipelineConfig, TrajectoryMethod, TrajectorySummary};
use ilm_sim::record::{read_record, write_record};
use ilm_sim::simulator::{as_classed, generate_trajectory, SimFrame};
use ilm_sim::TrajectorySpec;
use serde::Serialize;

use crate::args::*;
use crate::config::{RunConfig, Scale};
use crate::output::{write_csv, write_summary, Summary};

/// Everything a subcommand needs once flags and config are merged.
pub struct RunContext {
    pub cfg: RunConfig,
    pub map: FieldMap,
    pub scale: Scale,
    pub hash: String,
}

impl RunContext {
    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn summary<P: Serialize, M: Serialize>(&self, command: &'static str, params: P, metrics: M) -> Summary<P, M> {
        Summary { command, config_hash: self.hash.clone(), seed: self.cfg.seed, params, metrics }
    }
}

fn slug(name: &str) -> String {
    name.replace(['+', '-'], "_")
}

/// Applies `--strategy`/`--estimator` and rejects class-aware strategies for ICP.
fn apply_registration(cfg: &mut RunConfig, flags: &RegistrationFlags, uses_icp: bool) -> anyhow::Result<()> {
    if let Some(s) = flags.strategy {
        if uses_icp && s != MatchStrategy::Identical {
            bail!("--strategy {s} conflicts with --method icp: ICP matching is class-agnostic (use --method ilm or drop --strategy)");
        }
        cfg.registration.strategy = s;
    }
    if let Some(e) = flags.estimator {
        cfg.registration.estimator = e;
    }
    cfg.registration.validate()?;
    Ok(())
}

pub fn bench(ctx: &RunContext, a: &BenchArgs) -> anyhow::Result<()> {
    let samples = a.samples.or(ctx.cfg.experiment.samples).unwrap_or(ctx.scale.samples);
    let warmup = a.warmup.or(ctx.cfg.experiment.warmup).unwrap_or(samples.min(200) / 10);
    if samples == 0 {
        bail!("--samples must be at least 1");
    }
    if warmup >= samples {
        bail!("--warmup ({warmup}) must be smaller than --samples ({samples})");
    }
    let seed = ctx.cfg.seed;
    let lap = bench_lap_solvers(samples, &ctx.map, &ctx.cfg.sensor, seed, warmup)?;
    let pose = bench_pose_estimation(samples, &ctx.map, &ctx.cfg.sensor, &ctx.cfg.registration, seed, warmup)?;

    #[derive(Serialize)]
    struct LapRow {
        index: usize,
        x: f64,
        y: f64,
        theta: f64,
        observations: usize,
        landmarks: usize,
        optimal_cost: f64,
    }
    #[derive(Serialize)]
    struct PoseRow {
        index: usize,
        x: f64,
        y: f64,
        theta: f64,
        observations: usize,
        dlt_position_error: f64,
        kabsch_position_error: f64,
        ilm_dlt_correct: bool,
        ilm_kabsch_correct: bool,
    }
    #[derive(Serialize)]
    struct TimingRow<'a> {
        suite: &'a str,
        method: &'a str,
        samples: usize,
        mean_ms: f64,
        median_ms: f64,
        p99_ms: f64,
    }
    fn timing_row<'a>(suite: &'a str, r: &'a BenchRecord) -> TimingRow<'a> {
        TimingRow {
            suite,
            method: &r.method,
            samples: r.samples,
            mean_ms: r.mean_ms,
            median_ms: r.median_ms,
            p99_ms: r.p99_ms,
        }
    }
    write_csv(
        &ctx.out("bench_lap.csv"),
        lap.instances.iter().map(|i| LapRow {
            index: i.index,
            x: i.pose.x(),
            y: i.pose.y(),
            theta: i.pose.theta(),
            observations: i.observations,
            landmarks: i.landmarks,
            optimal_cost: i.optimal_cost,
        }),
    )?;
    write_csv(
        &ctx.out("bench_pose.csv"),
        pose.instances.iter().map(|i| PoseRow {
            index: i.index,
            x: i.pose.x(),
            y: i.pose.y(),
            theta: i.pose.theta(),
            observations: i.observations,
            dlt_position_error: i.dlt_position_error,
            kabsch_position_error: i.kabsch_position_error,
            ilm_dlt_correct: i.ilm_dlt_correct,
            ilm_kabsch_correct: i.ilm_kabsch_correct,
        }),
    )?;
    let timing = lap
        .records
        .iter()
        .map(|r| timing_row("lap", r))
        .chain(pose.records.iter().map(|r| timing_row("pose", r)));
    write_csv(&ctx.out("bench_timing.csv"), timing)?;

    let n = pose.instances.len() as f64;
    let mut metrics = BTreeMap::new();
    metrics.insert("lap_instances", lap.instances.len() as f64);
    metrics.insert("lap_mean_observations", lap.instances.iter().map(|i| i.observations as f64).sum::<f64>() / lap.instances.len() as f64);
    metrics.insert("pose_instances", n);
    metrics.insert("dlt_mean_position_error", pose.instances.iter().map(|i| i.dlt_position_error).sum::<f64>() / n);
    metrics.insert("kabsch_mean_position_error", pose.instances.iter().map(|i| i.kabsch_position_error).sum::<f64>() / n);
    metrics.insert("ilm_dlt_correct_rate", pose.instances.iter().filter(|i| i.ilm_dlt_correct).count() as f64 / n);
    metrics.insert("ilm_kabsch_correct_rate", pose.instances.iter().filter(|i| i.ilm_kabsch_correct).count() as f64 / n);
    #[derive(Serialize)]
    struct Params {
        samples: usize,
        warmup: usize,
    }
    write_summary(&ctx.out("bench_summary.json"), &ctx.summary("bench", Params { samples, warmup }, metrics))?;
    for r in lap.records.iter().chain(&pose.records) {
        println!("{:<12} mean {:.5} ms  median {:.5} ms  p99 {:.5} ms", r.method, r.mean_ms, r.median_ms, r.p99_ms);
    }
    Ok(())
}

pub fn heatmap_cmd(ctx: &mut RunContext, a: &HeatmapArgs) -> anyhow::Result<()> {
    apply_registration(&mut ctx.cfg, &a.reg, a.method.contains(&RegistrationMethod::Icp))?;
    let budgets = a.max_iter.clone().or_else(|| ctx.cfg.experiment.max_iter.clone()).unwrap_or_else(|| (1..=8).collect());
    if budgets.is_empty() || budgets.contains(&0) {
        bail!("--max-iter budgets must be at least 1");
    }
    let hc = HeatmapConfig {
        resolution: a.resolution.or(ctx.cfg.experiment.resolution).unwrap_or(ctx.scale.resolution),
        initial_theta: ctx.cfg.experiment.initial_theta.unwrap_or(0.0),
        ..HeatmapConfig::default()
    };

    #[derive(Serialize)]
    struct Row {
        method: &'static str,
        max_iter: usize,
        ix: usize,
        iy: usize,
        x: f64,
        y: f64,
        correct: bool,
        final_error: f64,
        iterations: usize,
    }
    #[derive(Serialize)]
    struct Coverage {
        method: &'static str,
        max_iter: usize,
        cells: usize,
        correct: usize,
        coverage: f64,
    }
    let mut rows = Vec::new();
    let mut coverage = Vec::new();
    let mut observations = 0;
    let mut dims = (0, 0);
    for &m in &a.method {
        for &k in &budgets {
            let g = heatmap(&hc, m, k, &ctx.map, &ctx.cfg.sensor, &ctx.cfg.registration, ctx.cfg.seed)?;
            observations = g.observations;
            dims = (g.nx, g.ny);
            coverage.push(Coverage {
                method: m.name(),
                max_iter: k,
                cells: g.cells.len(),
                correct: g.cells.iter().filter(|c| c.correct).count(),
                coverage: g.coverage(),
            });
            rows.extend(g.cells.iter().map(|c| Row {
                method: m.name(),
                max_iter: k,
                ix: c.ix,
                iy: c.iy,
                x: c.x,
                y: c.y,
                correct: c.correct,
                final_error: c.final_error,
                iterations: c.iterations,
            }));
        }
    }
    write_csv(&ctx.out("heatmap.csv"), rows)?;
    let top = *budgets.iter().max().expect("nonempty");
    let mut random_orientation = BTreeMap::new();
    for &m in &a.method {
        let r = random_orientation_rate(&hc, m, top, &ctx.map, &ctx.cfg.sensor, &ctx.cfg.registration, ctx.cfg.seed)?;
        random_orientation.insert(m.name(), r);
    }
    #[derive(Serialize)]
    struct Params {
        true_pose: Pose2D,
        resolution: f64,
        initial_theta: f64,
        budgets: Vec<usize>,
        methods: Vec<&'static str>,
    }
    #[derive(Serialize)]
    struct Metrics {
        observations: usize,
        nx: usize,
        ny: usize,
        coverage: Vec<Coverage>,
        random_orientation_budget: usize,
        random_orientation_rate: BTreeMap<&'static str, f64>,
    }
    for c in &coverage {
        println!("{:<4} max_iter {:>2}: coverage {:.4}", c.method, c.max_iter, c.coverage);
    }
    let params = Params {
        true_pose: hc.true_pose,
        resolution: hc.resolution,
        initial_theta: hc.initial_theta,
        budgets,
        methods: a.method.iter().map(|m| m.name()).collect(),
    };
    let metrics = Metrics {
        observations,
        nx: dims.0,
        ny: dims.1,
        coverage,
        random_orientation_budget: top,
        random_orientation_rate: random_orientation,
    };
    write_summary(&ctx.out("heatmap_summary.json"), &ctx.summary("heatmap", params, metrics))
}

pub fn rates(ctx: &mut RunContext, a: &RatesArgs) -> anyhow::Result<()> {
    apply_registration(&mut ctx.cfg, &a.reg, a.method.contains(&RegistrationMethod::Icp))?;
    let e = &ctx.cfg.experiment;
    let defaults = RateConfig::default();
    let rc = RateConfig {
        pose_samples: a.pose_samples.or(e.pose_samples).unwrap_or(ctx.scale.pose_samples),
        position_offsets: e.position_offsets.clone().unwrap_or(defaults.position_offsets),
        angle_offsets: e.angle_offsets_deg.as_ref().map_or(defaults.angle_offsets, |v| v.iter().map(|d| d.to_radians()).collect()),
        max_iter: a.max_iter.or(e.rate_max_iter).unwrap_or(defaults.max_iter),
        min_observations: e.min_observations.unwrap_or(defaults.min_observations),
    };
    if rc.pose_samples == 0 {
        bail!("--pose-samples must be at least 1");
    }
    let all = matching_rate_surfaces(&rc, &ctx.map, &ctx.cfg.sensor, &ctx.cfg.registration, ctx.cfg.seed)?;
    let rows: Vec<_> = all.into_iter().filter(|r| a.method.contains(&r.method)).collect();

    #[derive(Serialize)]
    struct Row {
        method: &'static str,
        position_offset: f64,
        angle_offset_deg: f64,
        trials: usize,
        correct: usize,
        rate: f64,
    }
    write_csv(
        &ctx.out("rates.csv"),
        rows.iter().map(|r| Row {
            method: r.method.name(),
            position_offset: r.position_offset,
            angle_offset_deg: r.angle_offset.to_degrees(),
            trials: r.trials,
            correct: r.correct,
            rate: r.rate(),
        }),
    )?;
    let rate_of = |m: RegistrationMethod, dp: f64, da: f64| {
        rows.iter().find(|r| r.method == m && r.position_offset == dp && r.angle_offset == da).map(|r| r.rate())
    };
    let dominance = a.method.len() == 2
        && rows
            .iter()
            .filter(|r| r.method == RegistrationMethod::Ilm)
            .all(|r| rate_of(RegistrationMethod::Icp, r.position_offset, r.angle_offset).is_none_or(|icp| r.rate() >= icp));
    let mut mean_rate = BTreeMap::new();
    for &m in &a.method {
        let v: Vec<f64> = rows.iter().filter(|r| r.method == m).map(|r| r.rate()).collect();
        mean_rate.insert(m.name(), v.iter().sum::<f64>() / v.len().max(1) as f64);
    }
    #[derive(Serialize)]
    struct Metrics {
        rows: usize,
        ilm_at_least_icp_everywhere: Option<bool>,
        mean_rate: BTreeMap<&'static str, f64>,
    }
    let metrics = Metrics { rows: rows.len(), ilm_at_least_icp_everywhere: (a.method.len() == 2).then_some(dominance), mean_rate };
    write_summary(&ctx.out("rates_summary.json"), &ctx.summary("rates", &rc, metrics))
}

pub fn noise_sweep(ctx: &RunContext, a: &NoiseArgs) -> anyhow::Result<()> {
    let e = &ctx.cfg.experiment;
    let poses = a.poses.or(e.noise_poses).unwrap_or(ctx.scale.noise_poses);
    let widths = a.widths.clone().or_else(|| e.noise_widths.clone()).unwrap_or_else(|| vec![0.1, 0.2, 0.3, 0.4, 0.5]);
    if poses == 0 {
        bail!("--poses must be at least 1");
    }
    let rows = sweep_pose_noise(&widths, poses, &ctx.map, &ctx.cfg.sensor, ctx.cfg.seed)?;

    #[derive(Serialize)]
    struct Row {
        width: f64,
        method: &'static str,
        poses: usize,
        mean_position_error: f64,
        mean_orientation_error_deg: f64,
    }
    write_csv(
        &ctx.out("noise_sweep.csv"),
        rows.iter().map(|r| Row {
            width: r.width,
            method: r.method.name(),
            poses: r.poses,
            mean_position_error: r.mean_position_error,
            mean_orientation_error_deg: r.mean_orientation_error.to_degrees(),
        }),
    )?;
    let pairs: Vec<_> = rows.chunks(2).collect();
    #[derive(Serialize)]
    struct Metrics {
        kabsch_position_le_dlt_everywhere: bool,
        max_orientation_relative_gap: f64,
    }
    let metrics = Metrics {
        kabsch_position_le_dlt_everywhere: pairs.iter().all(|p| p[1].mean_position_error <= p[0].mean_position_error),
        max_orientation_relative_gap: pairs
            .iter()
            .map(|p| {
                let d = p[0].mean_orientation_error.max(p[1].mean_orientation_error);
                if d > 0.0 {
                    (p[0].mean_orientation_error - p[1].mean_orientation_error).abs() / d
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max),
    };
    #[derive(Serialize)]
    struct Params {
        poses: usize,
        widths: Vec<f64>,
    }
    write_summary(&ctx.out("noise_sweep_summary.json"), &ctx.summary("noise-sweep", Params { poses, widths }, metrics))
}

fn pipeline_config(cfg: &RunConfig, particles: Option<usize>) -> PipelineConfig {
    PipelineConfig {
        registration: cfg.registration,
        outlier: cfg.outlier,
        filter: cfg.filter,
        particles: particles.unwrap_or(cfg.pipeline.particles),
        init_spread: cfg.pipeline.init_spread,
        init: cfg.pipeline.init,
        hypotheses: cfg.hypotheses.clone(),
        amcl: cfg.amcl,
    }
}

#[derive(Serialize)]
struct FrameRow {
    frame: usize,
    time: f64,
    true_x: f64,
    true_y: f64,
    true_theta: f64,
    est_x: f64,
    est_y: f64,
    est_theta: f64,
    position_error: f64,
    orientation_error_deg: f64,
    measured: bool,
}

impl From<&FrameEstimate> for FrameRow {
    fn from(e: &FrameEstimate) -> Self {
        FrameRow {
            frame: e.frame,
            time: e.time,
            true_x: e.truth.x(),
            true_y: e.truth.y(),
            true_theta: e.truth.theta(),
            est_x: e.estimate.x(),
            est_y: e.estimate.y(),
            est_theta: e.estimate.theta(),
            position_error: e.position_error,
            orientation_error_deg: e.orientation_error.to_degrees(),
            measured: e.measured,
        }
    }
}

/// Runs every pipeline over `frames`, writing `<prefix>_<method>.csv`,
/// `<prefix>_timing.csv` and `<prefix>_summary.json`.
#[allow(clippy::too_many_arguments)]
fn run_pipelines<P: Serialize>(
    ctx: &RunContext,
    prefix: &str,
    command: &'static str,
    methods: &[TrajectoryMethod],
    frames: &[SimFrame],
    dt: f64,
    pc: &PipelineConfig,
    params: P,
) -> anyhow::Result<()> {
    let mut summaries: Vec<TrajectorySummary> = Vec::new();
    let mut timing = Vec::new();
    for &m in methods {
        log::info!("running {m} over {} frames", frames.len());
        let run = run_trajectory(m, frames, dt, &ctx.map, pc, ctx.cfg.seed, ctx.cfg.pipeline.final_window)?;
        write_csv(&ctx.out(&format!("{prefix}_{}.csv", slug(m.name()))), run.estimates.iter().map(FrameRow::from))?;
        let s = &run.summary;
        println!(
            "{:<15} position RMSE {:.4} m  orientation RMSE {:.3} deg  mean frame {:.4} ms",
            m.name(),
            s.overall.position_rmse,
            s.overall.orientation_rmse_deg,
            run.mean_latency_ms()
        );
        timing.push(BenchRecord::from_durations(m.name(), run.latency_ms[1..].to_vec()));
        summaries.push(run.summary);
    }
    write_csv(&ctx.out(&format!("{prefix}_timing.csv")), timing)?;
    write_summary(&ctx.out(&format!("{prefix}_summary.json")), &ctx.summary(command, params, summaries))
}

fn check_pipeline_flags(cfg: &mut RunConfig, methods: &[TrajectoryMethod], reg: &RegistrationFlags) -> anyhow::Result<()> {
    if methods.is_empty() {
        bail!("--method needs at least one pipeline");
    }
    apply_registration(cfg, reg, methods.contains(&TrajectoryMethod::Icp))
}

pub fn trajectory(ctx: &mut RunContext, a: &TrajectoryArgs) -> anyhow::Result<()> {
    check_pipeline_flags(&mut ctx.cfg, &a.method, &a.reg)?;
    let mut spec = match a.spec.as_str() {
        "rect" => TrajectorySpec { waypoints: TrajectorySpec::goal_box_rectangle(&ctx.map).waypoints, ..ctx.cfg.trajectory.clone() },
        _ => ctx.cfg.trajectory.clone(),
    };
    if let Some(l) = a.laps {
        spec.laps = l;
    }
    if a.particles == Some(0) {
        bail!("--particles must be at least 1");
    }
    let frames = generate_trajectory(&spec, &ctx.map, &ctx.cfg.trajectory_sensor, ctx.cfg.seed)?;
    let record = ctx.out("frames.jsonl");
    let f = File::create(&record).with_context(|| format!("cannot create {}", record.display()))?;
    write_record(std::io::BufWriter::new(f), spec.dt, &frames)?;
    let pc = pipeline_config(&ctx.cfg, a.particles);

    #[derive(Serialize)]
    struct Params<'a> {
        spec: &'a TrajectorySpec,
        frames: usize,
        particles: usize,
        methods: Vec<&'static str>,
    }
    let params = Params { spec: &spec, frames: frames.len(), particles: pc.particles, methods: a.method.iter().map(|m| m.name()).collect() };
    run_pipelines(ctx, "trajectory", "trajectory", &a.method, &frames, spec.dt, &pc, params)
}

fn read_frames(path: &Path) -> anyhow::Result<(f64, Vec<SimFrame>)> {
    let f = File::open(path).with_context(|| format!("cannot open record file {}", path.display()))?;
    let (header, frames) = read_record(BufReader::new(f)).with_context(|| format!("record file {}", path.display()))?;
    Ok((header.dt, frames))
}

pub fn replay(ctx: &mut RunContext, a: &ReplayArgs) -> anyhow::Result<()> {
    check_pipeline_flags(&mut ctx.cfg, &a.method, &a.reg)?;
    if a.particles == Some(0) {
        bail!("--particles must be at least 1");
    }
    let (dt, frames) = read_frames(&a.record)?;
    let pc = pipeline_config(&ctx.cfg, a.particles);
    #[derive(Serialize)]
    struct Params {
        dt: f64,
        frames: usize,
        particles: usize,
        methods: Vec<&'static str>,
    }
    let params = Params { dt, frames: frames.len(), particles: pc.particles, methods: a.method.iter().map(|m| m.name()).collect() };
    run_pipelines(ctx, "replay", "replay", &a.method, &frames, dt, &pc, params)
}

pub fn global_init(ctx: &mut RunContext, a: &GlobalInitArgs) -> anyhow::Result<()> {
    apply_registration(&mut ctx.cfg, &a.reg, false)?;
    let hyp = ctx.cfg.hypotheses(&ctx.map);

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        true_x: f64,
        true_y: f64,
        true_theta: f64,
        visible: usize,
        est_x: Option<f64>,
        est_y: Option<f64>,
        est_theta: Option<f64>,
        hypothesis: Option<usize>,
        frame: Option<usize>,
        position_error: f64,
        orientation_error_deg: f64,
        correct: bool,
        twin: bool,
    }
    let rows: Vec<GlobalTrial> = match &a.record {
        Some(path) => {
            let (_, frames) = read_frames(path)?;
            let classed: Vec<_> = frames.iter().map(|f| as_classed(&f.observations)).collect();
            let fix = global_localize(&classed, &ctx.map, &hyp, &ctx.cfg.registration)?;
            let truth = frames[fix.frame].true_pose;
            let err = ilm_core::geometry::pose_error(&fix.pose, &truth);
            let twin = ilm_core::geometry::pose_error(&fix.pose, &truth.point_reflected());
            let tol = ilm_sim::experiments::global::FIX_TOLERANCE;
            vec![GlobalTrial {
                trial: 0,
                truth,
                visible: frames[fix.frame].observations.len(),
                estimate: Some(fix.pose),
                hypothesis: Some(fix.hypothesis),
                frame: Some(fix.frame),
                position_error: err.position,
                orientation_error: err.orientation,
                correct: err.position < tol && err.orientation < tol,
                twin: twin.position < tol && twin.orientation < tol,
            }]
        }
        None => {
            let mut gc = ctx.cfg.global_init;
            if let Some(t) = a.trials {
                gc.trials = t;
            }
            if gc.trials == 0 {
                bail!("--trials must be at least 1");
            }
            global_init_trials(&gc, &ctx.map, &ctx.cfg.sensor, &hyp, &ctx.cfg.registration, ctx.cfg.seed)?
        }
    };
    write_csv(
        &ctx.out("global_init.csv"),
        rows.iter().map(|r| Row {
            trial: r.trial,
            true_x: r.truth.x(),
            true_y: r.truth.y(),
            true_theta: r.truth.theta(),
            visible: r.visible,
            est_x: r.estimate.map(|p| p.x()),
            est_y: r.estimate.map(|p| p.y()),
            est_theta: r.estimate.map(|p| p.theta()),
            hypothesis: r.hypothesis,
            frame: r.frame,
            position_error: r.position_error,
            orientation_error_deg: r.orientation_error.to_degrees(),
            correct: r.correct,
            twin: r.twin,
        }),
    )?;
    let qualifying: Vec<_> = rows.iter().filter(|r| r.visible >= hyp.min_landmarks).collect();
    #[derive(Serialize)]
    struct Metrics {
        trials: usize,
        qualifying: usize,
        resolved: usize,
        twins: usize,
        rejected: usize,
        resolved_rate: f64,
    }
    let resolved = qualifying.iter().filter(|r| r.resolved()).count();
    let metrics = Metrics {
        trials: rows.len(),
        qualifying: qualifying.len(),
        resolved,
        twins: qualifying.iter().filter(|r| r.twin).count(),
        rejected: qualifying.iter().filter(|r| r.estimate.is_none()).count(),
        resolved_rate: resolved as f64 / qualifying.len().max(1) as f64,
    };
    println!("resolved {}/{} qualifying starts ({} twins)", metrics.resolved, metrics.qualifying, metrics.twins);
    #[derive(Serialize)]
    struct Params<'a> {
        hypotheses: &'a ilm_core::robustness::HypothesisSet,
        record: Option<&'a Path>,
    }
    write_summary(&ctx.out("global_init_summary.json"), &ctx.summary("global-init", Params { hypotheses: &hyp, record: a.record.as_deref() }, metrics))
}

pub fn map_cmd(cfg: &RunConfig, cmd: &MapCommand) -> anyhow::Result<()> {
    match cmd {
        MapCommand::Default { length, width, file } => {
            let map = generate_default_map(*length, *width)?;
            let path = match file {
                Some(p) => p.clone(),
                None => {
                    std::fs::create_dir_all(&cfg.out).with_context(|| format!("cannot create {}", cfg.out.display()))?;
                    cfg.out.join("map.toml")
                }
            };
            map.save(&path)?;
            println!("wrote {} landmarks to {}", map.len(), path.display());
        }
        MapCommand::Show => {
            let map = cfg.load_map()?;
            println!("field {} x {} m, {} landmarks", map.field_length(), map.field_width(), map.len());
            for c in LandmarkClass::ALL {
                println!("  {c:<14} {}", map.landmarks().iter().filter(|l| l.class == c).count());
            }
            let asym = map.symmetry_violations();
            if asym.is_empty() {
                println!("symmetric under 180 deg rotation");
            } else {
                println!("landmarks without a rotated twin: {asym:?}");
            }
        }
    }
    Ok(())
}
