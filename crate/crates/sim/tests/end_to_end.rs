use std::fs::File;
use std::io::{BufReader, BufWriter};

use ilm_core::field_map::generate_default_map;
use ilm_core::fusion::predict_state;
use ilm_core::geometry::pose_error;
use ilm_sim::experiments::trajectory::{run_trajectory, PipelineConfig, TrajectoryMethod};
use ilm_sim::record::{read_record, write_record};
use ilm_sim::simulator::generate_trajectory;
use ilm_sim::{SensorModel, TrajectorySpec};

#[test]
fn recorded_frames_replay_identically() {
    let map = generate_default_map(14.0, 9.0).unwrap();
    let spec = TrajectorySpec { laps: 1, ..TrajectorySpec::goal_box_rectangle(&map) };
    let frames = generate_trajectory(&spec, &map, &SensorModel::noisy(), 4).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frames.jsonl");
    write_record(BufWriter::new(File::create(&path).unwrap()), spec.dt, &frames).unwrap();
    let (header, back) = read_record(BufReader::new(File::open(&path).unwrap())).unwrap();
    assert_eq!(header.frames, frames.len());
    assert_eq!(header.dt, spec.dt);
    assert_eq!(back, frames);

    let cfg = PipelineConfig::default();
    for m in [TrajectoryMethod::IlmPf, TrajectoryMethod::IlmEkf, TrajectoryMethod::Amcl] {
        let a = run_trajectory(m, &frames, spec.dt, &map, &cfg, 9, 50).unwrap();
        let b = run_trajectory(m, &back, header.dt, &map, &cfg, 9, 50).unwrap();
        assert_eq!(a.estimates, b.estimates, "{m}");
    }
}

#[test]
fn noiseless_odometry_integrates_to_the_true_path() {
    let map = generate_default_map(14.0, 9.0).unwrap();
    let spec = TrajectorySpec { laps: 2, ..TrajectorySpec::goal_box_rectangle(&map) }.noiseless();
    let frames = generate_trajectory(&spec, &map, &SensorModel::default(), 0).unwrap();
    assert_eq!(frames.len(), 2 * spec.steps_per_lap() + 1);
    let mut pose = frames[0].true_pose;
    for f in &frames[1..] {
        pose = predict_state(&pose, &f.control, spec.dt);
        assert!(pose_error(&pose, &f.true_pose).position < 1e-9);
    }
    assert!(pose_error(&frames[0].true_pose, &frames.last().unwrap().true_pose).position < 1e-9);
}

#[test]
fn every_pipeline_beats_dead_reckoning_on_a_noisy_lap() {
    let map = generate_default_map(14.0, 9.0).unwrap();
    let spec = TrajectorySpec { laps: 2, ..TrajectorySpec::goal_box_rectangle(&map) };
    let frames = generate_trajectory(&spec, &map, &SensorModel::noisy(), 21).unwrap();
    let cfg = PipelineConfig::default();
    let window = spec.steps_per_lap();
    let dr = run_trajectory(TrajectoryMethod::DeadReckoning, &frames, spec.dt, &map, &cfg, 21, window).unwrap();
    for m in [TrajectoryMethod::IlmPf, TrajectoryMethod::IlmEkf, TrajectoryMethod::Amcl] {
        let run = run_trajectory(m, &frames, spec.dt, &map, &cfg, 21, window).unwrap();
        assert_eq!(run.estimates.len(), frames.len());
        assert!(run.summary.last.position_rmse < dr.summary.last.position_rmse, "{m}: {:?} vs {:?}", run.summary.last, dr.summary.last);
        assert!(run.summary.overall.position_rmse < 0.3, "{m}: {:?}", run.summary.overall);
    }
}
