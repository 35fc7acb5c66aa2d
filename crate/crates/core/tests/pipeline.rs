use std::f64::consts::PI;

use ilm_core::field_map::{generate_default_map, load_map, FieldMap, LandmarkClass};
use ilm_core::fusion::{ekf_step, predict_state, ControlInput, NoiseModel, ParticleFilter, ParticleSet};
use ilm_core::geometry::{pose_error, Point2, Pose2D};
use ilm_core::registration::{icp_localize, ilm_localize, RegistrationConfig};
use ilm_core::robustness::{drop_outliers, global_localize, HypothesisSet, OutlierConfig};
use ilm_core::MatchStrategy;
use nalgebra::Matrix3;

fn observe(truth: &Pose2D, map: &FieldMap, range: f64) -> Vec<(Point2, LandmarkClass)> {
    map.landmarks()
        .iter()
        .filter(|l| l.position.distance(&truth.translation()) <= range)
        .map(|l| (truth.inverse_transform_point(&l.position), l.class))
        .collect()
}

#[test]
fn saved_map_localizes_like_the_generated_one() {
    let map = generate_default_map(14.0, 9.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.toml");
    map.save(&path).unwrap();
    let loaded = load_map(&path).unwrap();
    assert_eq!(loaded, map);

    let truth = Pose2D::new(1.0, 1.0, 0.0);
    let obs = observe(&truth, &map, 5.0);
    let guess = Pose2D::new(1.3, 0.8, 0.1);
    let cfg = RegistrationConfig::default().with_max_iteration(8);
    let a = ilm_localize(&obs, guess, &map, &cfg).unwrap();
    let b = ilm_localize(&obs, guess, &loaded, &cfg).unwrap();
    assert_eq!(a, b);
    let e = pose_error(&a.pose, &truth);
    assert!(e.position < 1e-9 && e.orientation < 1e-9, "{e:?}");
}

#[test]
fn every_strategy_recovers_a_small_offset() {
    let map = generate_default_map(14.0, 9.0).unwrap();
    let truth = Pose2D::new(-3.0, 2.0, 0.7);
    let obs = observe(&truth, &map, 6.0);
    let guess = Pose2D::new(-2.8, 1.9, 0.65);
    for strategy in [MatchStrategy::Separate, MatchStrategy::Identical, MatchStrategy::ParallelBest] {
        let cfg = RegistrationConfig { strategy, max_iteration: 8, ..RegistrationConfig::default() };
        let r = ilm_localize(&obs, guess, &map, &cfg).unwrap();
        assert!(pose_error(&r.pose, &truth).position < 1e-9, "{strategy:?}");
        assert!(r.matching.is_one_to_one());
    }
    let points: Vec<Point2> = obs.iter().map(|o| o.0).collect();
    let icp = icp_localize(&points, truth, &map, &RegistrationConfig::default()).unwrap();
    assert!(pose_error(&icp.pose, &truth).position < 1e-9);
}

fn circle(start: Pose2D, u: &ControlInput, dt: f64, steps: usize) -> Vec<Pose2D> {
    std::iter::successors(Some(start), |p| Some(predict_state(p, u, dt))).skip(1).take(steps).collect()
}

#[test]
fn global_fix_seeds_both_filters() {
    let map = generate_default_map(14.0, 9.0).unwrap();
    let hyp = HypothesisSet::default_for(&map);
    let reg = RegistrationConfig::default().with_max_iteration(8);
    let start = Pose2D::new(hyp.poses[2].x() + 0.2, hyp.poses[2].y() + 0.3, hyp.poses[2].theta() - 0.05);

    let fix = global_localize(&[observe(&start, &map, 9.0)], &map, &hyp, &reg).unwrap();
    assert!(pose_error(&fix.pose, &start).position < 1e-6);

    let u = ControlInput::new(1.0, 0.0, 0.5);
    let dt = 0.05;
    let noise = NoiseModel::default();
    let mut pf = ParticleFilter::new(ParticleSet::around(&fix.pose, 200, [0.05, 0.05, 0.02], 11), noise, 12);
    let (mut ekf, mut cov) = (fix.pose, Matrix3::from_diagonal_element(0.01));
    // odometry reads 10% fast, so only the measurements keep the filters on track
    let odo = ControlInput::new(1.1, 0.0, 0.55);
    let path = circle(start, &u, dt, (PI / dt) as usize);
    for truth in &path {
        let guess = predict_state(&ekf, &odo, dt);
        let r = ilm_localize(&observe(truth, &map, 6.0), guess, &map, &reg).unwrap();
        pf.step(&odo, Some(&r.pose), dt);
        (ekf, cov) = ekf_step(&ekf, &cov, &odo, Some(&r.pose), dt, &noise).unwrap();
    }
    let truth = path.last().unwrap();
    let dead = path.iter().fold(start, |p, _| predict_state(&p, &odo, dt));
    let (e_pf, e_ekf, e_dr) = (pose_error(&pf.set.estimate(), truth), pose_error(&ekf, truth), pose_error(&dead, truth));
    assert!(e_pf.position < 0.2 && e_pf.orientation < 0.05, "{e_pf:?}");
    assert!(e_ekf.position < 0.2 && e_ekf.orientation < 0.05, "{e_ekf:?}");
    assert!(e_dr.position > 2.0 * e_pf.position.max(e_ekf.position), "{e_dr:?}");
}

#[test]
fn outlier_screen_drops_only_the_displaced_detection() {
    let map = generate_default_map(14.0, 9.0).unwrap();
    let reg = RegistrationConfig::default().with_max_iteration(8);
    let outlier = OutlierConfig::default();
    let mut tripped = 0;
    for truth in circle(Pose2D::new(-2.0, -3.0, 0.3), &ControlInput::new(1.0, 0.0, 0.5), 0.05, 120) {
        let mut obs = observe(&truth, &map, 4.5);
        if obs.len() < outlier.min_landmarks {
            continue;
        }
        obs[0].0 = obs[0].0 + Point2::new(3.0, -3.0);
        let raw = ilm_localize(&obs, truth, &map, &reg).unwrap();
        let r = drop_outliers(&obs, &raw, &map, &outlier).unwrap();
        if raw.mean_matching_error <= outlier.error_threshold {
            assert_eq!(r, raw);
            continue;
        }
        tripped += 1;
        assert_eq!(r.dropped, vec![0]);
        assert!(!r.low_confidence);
        assert!(pose_error(&r.pose, &truth).position < 1e-9);
    }
    assert!(tripped >= 20, "{tripped}");
}
