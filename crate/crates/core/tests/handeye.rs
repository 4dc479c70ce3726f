use calibkit::geometry::{FrameId, RigidTransform};
use calibkit::handeye::{
    calibrate_handeye, handeye_cost, make_motion_pairs, pair_consistency, refine, solve_dq,
    HandEyeError, HandEyeOptions, PairOptions, PairStrategy, RefineOptions,
};
use calibkit::synth::{
    generate_handeye, parallel_axis_scenario, pose_error, pose_sampler, random_handeye_scenario,
    HandEyeScenario, NoiseModel, Workspace,
};
use nalgebra::{UnitQuaternion, Vector3};

fn x_example() -> RigidTransform<f64> {
    RigidTransform::new(
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 30f64.to_radians()),
        Vector3::new(0.05, 0.0, 0.10),
        FrameId::Camera,
        FrameId::Tcp,
    )
}

fn example_scenario(noise: NoiseModel<f64>, seed: u64) -> HandEyeScenario<f64> {
    HandEyeScenario {
        x_gt: x_example(),
        pattern_world: RigidTransform::from_rotation_vector(
            Vector3::new(0.0, 0.0, 0.4),
            Vector3::new(0.5, 0.05, 0.0),
            FrameId::World,
            FrameId::Pattern,
        ),
        tcp_poses: pose_sampler(10, &Workspace::tabletop(), 30f64.to_radians(), seed).unwrap(),
        noise,
        seed,
    }
}

#[test]
fn example_mounting_recovered() {
    let samples = generate_handeye(&example_scenario(NoiseModel::zero(), 1)).unwrap();
    let r = calibrate_handeye(&samples, &HandEyeOptions::default()).unwrap();
    let e = pose_error(&r.x, &x_example()).unwrap();
    assert!(e.rotation_error < 1e-8 && e.translation_error < 1e-8, "{e:?}");
    assert_eq!(r.pairs_used, 45);
    assert!(r.rotation_rms < 1e-8 && r.translation_rms < 1e-8);
}

#[test]
fn closed_form_is_exact_on_clean_data() {
    let samples = generate_handeye(&example_scenario(NoiseModel::zero(), 2)).unwrap();
    let pairs = make_motion_pairs(&samples, &PairOptions::default()).unwrap();
    let x0 = solve_dq(&pairs, 5f64.to_radians()).unwrap();
    let e = pose_error(&x0, &x_example()).unwrap();
    assert!(e.rotation_error < 1e-8 && e.translation_error < 1e-8, "{e:?}");
    for p in &pairs {
        assert!(pair_consistency(&x0, p) < 1e-9);
    }
}

#[test]
fn refinement_basin_of_attraction() {
    let samples = generate_handeye(&example_scenario(NoiseModel::zero(), 3)).unwrap();
    let pairs = make_motion_pairs(&samples, &PairOptions::default()).unwrap();
    let kick = RigidTransform::from_rotation_vector(
        Vector3::new(1.0, -2.0, 0.5).normalize() * 5f64.to_radians(),
        Vector3::new(0.02, 0.0, 0.0),
        FrameId::Camera,
        FrameId::Camera,
    );
    let x0 = kick.compose(&x_example()).unwrap();
    let r = refine(&x0, &pairs, &RefineOptions::default()).unwrap();
    let e = pose_error(&r.x, &x_example()).unwrap();
    assert!(e.rotation_error < 1e-8 && e.translation_error < 1e-8, "{e:?}");
}

#[test]
fn random_scenarios_recovered() {
    for seed in 0..20 {
        let s = random_handeye_scenario::<f64>(10, 30f64.to_radians(), NoiseModel::zero(), seed).unwrap();
        let samples = generate_handeye(&s).unwrap();
        let r = calibrate_handeye(&samples, &HandEyeOptions::default()).unwrap();
        let e = pose_error(&r.x, &s.x_gt).unwrap();
        assert!(e.rotation_error < 1e-8 && e.translation_error < 1e-8, "seed {seed}: {e:?}");
    }
}

#[test]
fn parallel_axes_are_degenerate() {
    for seed in 0..10 {
        let samples = generate_handeye(&parallel_axis_scenario::<f64>(8, seed)).unwrap();
        assert_eq!(
            calibrate_handeye(&samples, &HandEyeOptions::default()).unwrap_err(),
            HandEyeError::DegenerateMotionSet
        );
    }
}

#[test]
fn refinement_never_increases_cost() {
    let noise = NoiseModel::new(0.2f64.to_radians(), 0.001, 0.0).unwrap();
    for seed in 0..10 {
        let s = random_handeye_scenario::<f64>(10, 30f64.to_radians(), noise, seed).unwrap();
        let samples = generate_handeye(&s).unwrap();
        let r = calibrate_handeye(&samples, &HandEyeOptions::default()).unwrap();
        assert!(r.refined && r.cost <= r.initial_cost, "seed {seed}");
        let e = pose_error(&r.x, &s.x_gt).unwrap();
        assert!(e.rotation_error < 1f64.to_radians() && e.translation_error < 0.01, "{e:?}");
    }
}

#[test]
fn consecutive_strategy_uses_fewer_pairs() {
    let samples = generate_handeye(&example_scenario(NoiseModel::zero(), 4)).unwrap();
    let mut opts = HandEyeOptions::default();
    opts.pairs.strategy = PairStrategy::Consecutive;
    let r = calibrate_handeye(&samples, &opts).unwrap();
    assert_eq!(r.pairs_used, 9);
    let e = pose_error(&r.x, &x_example()).unwrap();
    assert!(e.rotation_error < 1e-8 && e.translation_error < 1e-8);
}

#[test]
fn refine_can_be_capped() {
    let noise = NoiseModel::new(0.5f64.to_radians(), 0.002, 0.0).unwrap();
    let samples = generate_handeye(&example_scenario(noise, 5)).unwrap();
    let pairs = make_motion_pairs(&samples, &PairOptions::default()).unwrap();
    let x0 = solve_dq(&pairs, 5f64.to_radians()).unwrap();
    let kick = RigidTransform::from_rotation_vector(
        Vector3::new(0.1, 0.0, 0.0),
        Vector3::zeros(),
        FrameId::Camera,
        FrameId::Camera,
    );
    let x0 = kick.compose(&x0).unwrap();
    let opts = RefineOptions {
        max_iters: 1,
        ..RefineOptions::default()
    };
    match refine(&x0, &pairs, &opts) {
        Err(HandEyeError::DidNotConverge(r)) => assert!(r.cost < handeye_cost(&x0, &pairs, 1.0)),
        other => panic!("expected DidNotConverge, got {other:?}"),
    }
}

#[test]
fn frame_labels_checked() {
    let samples = generate_handeye(&example_scenario(NoiseModel::zero(), 6)).unwrap();
    let pairs = make_motion_pairs(&samples, &PairOptions::default()).unwrap();
    let wrong = x_example().inverse();
    assert!(matches!(
        refine(&wrong, &pairs, &RefineOptions::default()),
        Err(HandEyeError::Geometry(_))
    ));
}

#[test]
fn f32_closed_form() {
    let s = random_handeye_scenario::<f32>(10, 0.5, NoiseModel::zero(), 8).unwrap();
    let samples = generate_handeye(&s).unwrap();
    let pairs = make_motion_pairs(&samples, &PairOptions::default()).unwrap();
    let x0 = solve_dq(&pairs, 0.1).unwrap();
    let e = pose_error(&x0, &s.x_gt).unwrap();
    assert!(e.rotation_error < 1e-3 && e.translation_error < 1e-3, "{e:?}");
}
