//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the report is always
//! printed.

use std::fs;
use std::panic;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use calibkit::chain::{chain_lidar_to_world, session_add, world_from_lidar, SessionState, Verdict};
use calibkit::geometry::RigidTransform;
use calibkit::handeye::{
    calibrate_handeye, handeye_cost, make_motion_pairs, refine, solve_dq, HandEyeError, HandEyeOptions,
};
use calibkit::lidarcam::{calibrate_lidar_camera, extract_plate_segment, LidarCamError, LidarCamOptions, SegmentParams};
use calibkit::synth::{
    generate_handeye, generate_lidar, lidar_from_camera, parallel_axis_scenario, parallel_normal_scenario,
    pose_error, random_chain_scenario, random_handeye_scenario, random_lidar_scenario, random_plate_poses,
    room_walls, LidarScenario, NoiseModel,
};
use calibkit_cli::format::{CalibrationFile, DatasetFile};
use nalgebra::{Point2, Point3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn spread() -> f64 {
    30f64.to_radians()
}

fn base_noise() -> NoiseModel<f64> {
    NoiseModel::new(0.2f64.to_radians(), 0.001, 0.005).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn handeye_exact_recovery() -> Outcome {
    let start = Instant::now();
    let (mut worst_r, mut worst_t, mut failures) = (0.0f64, 0.0f64, Vec::new());
    for seed in 0..100 {
        let s = random_handeye_scenario(10, spread(), NoiseModel::zero(), seed).map_err(|e| e.to_string())?;
        let samples = generate_handeye(&s).map_err(|e| e.to_string())?;
        match calibrate_handeye(&samples, &HandEyeOptions::default()) {
            Ok(r) => {
                let e = pose_error(&r.x, &s.x_gt).unwrap();
                worst_r = worst_r.max(e.rotation_error);
                worst_t = worst_t.max(e.translation_error);
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        failures.is_empty() && worst_r < 1e-8 && worst_t < 1e-8 && secs < 10.0,
        format!("max rot {worst_r:.2e} rad, max trans {worst_t:.2e} m, {secs:.2} s, failures {failures:?}"),
    )
}

fn handeye_residual() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..100 {
        let s = random_handeye_scenario(10, spread(), NoiseModel::zero(), 1000 + seed).map_err(|e| e.to_string())?;
        let samples = generate_handeye(&s).map_err(|e| e.to_string())?;
        let opts = HandEyeOptions::default();
        let x = calibrate_handeye(&samples, &opts).map_err(|e| format!("seed {seed}: {e}"))?.x;
        for p in make_motion_pairs(&samples, &opts.pairs).map_err(|e| e.to_string())? {
            let ax = p.a.compose(&x).unwrap().to_matrix();
            let xb = x.compose(&p.b).unwrap().to_matrix();
            worst = worst.max((ax - xb).norm());
        }
    }
    check(worst < 1e-9, format!("max ||AX - XB||_F = {worst:.2e} over 100 scenarios"))
}

fn refinement_monotone() -> Outcome {
    let noise = NoiseModel::new(0.2f64.to_radians(), 0.001, 0.0).unwrap();
    let mut ok = 0;
    let mut worst_gain = f64::NEG_INFINITY;
    for seed in 0..50 {
        let s = random_handeye_scenario(10, spread(), noise, 2000 + seed).map_err(|e| e.to_string())?;
        let samples = generate_handeye(&s).map_err(|e| e.to_string())?;
        let opts = HandEyeOptions::default();
        let pairs = make_motion_pairs(&samples, &opts.pairs).map_err(|e| e.to_string())?;
        let x0 = solve_dq(&pairs, opts.min_axis_angle).map_err(|e| e.to_string())?;
        let init = handeye_cost(&x0, &pairs, opts.refine.rotation_weight);
        let refined = match refine(&x0, &pairs, &opts.refine) {
            Ok(r) => r,
            Err(HandEyeError::DidNotConverge(r)) => *r,
            Err(e) => return Err(format!("seed {seed}: {e}")),
        };
        worst_gain = worst_gain.max(refined.cost - init);
        if refined.cost <= init {
            ok += 1;
        }
    }
    check(ok == 50, format!("{ok}/50 runs with refined <= initial, max (refined - initial) {worst_gain:.2e}"))
}

fn lidar_exact_recovery() -> Outcome {
    let (mut worst_r, mut worst_t, mut failures) = (0.0f64, 0.0f64, Vec::new());
    for seed in 0..100 {
        let s = random_lidar_scenario(5, spread(), NoiseModel::zero(), seed).map_err(|e| e.to_string())?;
        let data = generate_lidar(&s).map_err(|e| e.to_string())?;
        if data.correspondences.iter().any(|c| c.segment.points.len() != 30) {
            return Err(format!("seed {seed}: expected 30 points per plate"));
        }
        match calibrate_lidar_camera(&data.correspondences, &LidarCamOptions::default()) {
            Ok(r) => {
                let e = pose_error(&r.c, &s.c_gt).unwrap();
                worst_r = worst_r.max(e.rotation_error);
                worst_t = worst_t.max(e.translation_error);
            }
            Err(e) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    check(
        failures.is_empty() && worst_r < 1e-8 && worst_t < 1e-8,
        format!("max rot {worst_r:.2e} rad, max trans {worst_t:.2e} m, failures {failures:?}"),
    )
}

fn degeneracy_detection() -> Outcome {
    let mut axis_hits = 0;
    for seed in 0..20 {
        let s = parallel_axis_scenario::<f64>(10, 3000 + seed);
        let samples = generate_handeye(&s).map_err(|e| e.to_string())?;
        if matches!(
            calibrate_handeye(&samples, &HandEyeOptions::default()),
            Err(HandEyeError::DegenerateMotionSet)
        ) {
            axis_hits += 1;
        }
    }
    let mut normal_hits = 0;
    for seed in 0..20 {
        let s = parallel_normal_scenario::<f64>(5, 3000 + seed).map_err(|e| e.to_string())?;
        let data = generate_lidar(&s).map_err(|e| e.to_string())?;
        if matches!(
            calibrate_lidar_camera(&data.correspondences, &LidarCamOptions::default()),
            Err(LidarCamError::DegenerateGeometry)
        ) {
            normal_hits += 1;
        }
    }
    // false rejections on the well-posed suites of the exact-recovery criteria
    let mut false_rejections = 0;
    for seed in 0..100 {
        let s = random_handeye_scenario(10, spread(), NoiseModel::zero(), seed).map_err(|e| e.to_string())?;
        let samples = generate_handeye(&s).map_err(|e| e.to_string())?;
        if matches!(
            calibrate_handeye(&samples, &HandEyeOptions::default()),
            Err(HandEyeError::DegenerateMotionSet)
        ) {
            false_rejections += 1;
        }
        let s = random_lidar_scenario(5, spread(), NoiseModel::zero(), seed).map_err(|e| e.to_string())?;
        let data = generate_lidar(&s).map_err(|e| e.to_string())?;
        if matches!(
            calibrate_lidar_camera(&data.correspondences, &LidarCamOptions::default()),
            Err(LidarCamError::DegenerateGeometry)
        ) {
            false_rejections += 1;
        }
    }
    check(
        axis_hits == 20 && normal_hits == 20 && false_rejections == 0,
        format!("parallel axes {axis_hits}/20, parallel normals {normal_hits}/20, false rejections {false_rejections}/200"),
    )
}

fn chain_correctness() -> Outcome {
    let mut worst_point = 0.0f64;
    let mut worst_spread = 0.0f64;
    for seed in 0..10 {
        let s = random_chain_scenario::<f64>(10, 5, NoiseModel::zero(), 4000 + seed).map_err(|e| e.to_string())?;
        let samples = generate_handeye(&s.handeye).map_err(|e| e.to_string())?;
        let x = calibrate_handeye(&samples, &HandEyeOptions::default()).map_err(|e| e.to_string())?.x;
        let human = Point2::new(0.8, 0.25);
        let human_world = s.y_gt.inverse().transform_point(&Point3::new(human.x, human.y, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut ys: Vec<RigidTransform<f64>> = Vec::new();
        for (f, tcp) in s.handeye.tcp_poses.iter().enumerate() {
            let c_gt = lidar_from_camera(&s.y_gt, &s.handeye.x_gt, tcp).map_err(|e| e.to_string())?;
            let plates = random_plate_poses(5, &c_gt, spread(), &mut rng).map_err(|e| e.to_string())?;
            let data = generate_lidar(&LidarScenario::new(c_gt, plates, f as u64)).map_err(|e| e.to_string())?;
            let c_f = calibrate_lidar_camera(&data.correspondences, &LidarCamOptions::default())
                .map_err(|e| format!("seed {seed} pose {f}: {e}"))?
                .c;
            let r = chain_lidar_to_world(&c_f, &x, &tcp.inverse()).map_err(|e| e.to_string())?;
            let h = world_from_lidar(&r.y, &human).map_err(|e| e.to_string())?;
            worst_point = worst_point.max((h - human_world).norm());
            ys.push(r.y);
        }
        for y in &ys[1..] {
            worst_spread = worst_spread.max((y.to_matrix() - ys[0].to_matrix()).abs().max());
        }
    }
    check(
        worst_point < 1e-9 && worst_spread < 1e-9,
        format!("human point error {worst_point:.2e} m, Y spread over fixed poses {worst_spread:.2e}"),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(" ")
}

fn noise_trend() -> Outcome {
    let levels = [0.0, 0.5, 1.0, 2.0];
    // handeye rot, handeye trans, lidar rot, lidar trans
    let mut med = [[0.0; 4]; 4];
    for (li, k) in levels.iter().enumerate() {
        let noise = base_noise().scaled(*k);
        let mut errs: [Vec<f64>; 4] = Default::default();
        for seed in 0..50 {
            let s = random_handeye_scenario(10, spread(), noise, 5000 + seed).map_err(|e| e.to_string())?;
            let samples = generate_handeye(&s).map_err(|e| e.to_string())?;
            let x = match calibrate_handeye(&samples, &HandEyeOptions::default()) {
                Ok(r) => r.x,
                Err(HandEyeError::DidNotConverge(r)) => r.x,
                Err(e) => return Err(format!("hand-eye seed {seed}: {e}")),
            };
            let e = pose_error(&x, &s.x_gt).unwrap();
            errs[0].push(e.rotation_error);
            errs[1].push(e.translation_error);
            let s = random_lidar_scenario(5, spread(), noise, 5000 + seed).map_err(|e| e.to_string())?;
            let data = generate_lidar(&s).map_err(|e| e.to_string())?;
            let c = match calibrate_lidar_camera(&data.correspondences, &LidarCamOptions::default()) {
                Ok(r) => r.c,
                Err(LidarCamError::DidNotConverge(r)) => r.c,
                Err(e) => return Err(format!("lidar seed {seed}: {e}")),
            };
            let e = pose_error(&c, &s.c_gt).unwrap();
            errs[2].push(e.rotation_error);
            errs[3].push(e.translation_error);
        }
        for (m, e) in errs.into_iter().enumerate() {
            med[m][li] = median(e);
        }
    }
    let ok = med
        .iter()
        .all(|row| row.windows(2).all(|w| w[0] <= w[1]) && row[3] > row[0]);
    check(
        ok,
        format!(
            "medians at levels {levels:?}: he rot [{}], he trans [{}], lidar rot [{}], lidar trans [{}]",
            row(&med[0]),
            row(&med[1]),
            row(&med[2]),
            row(&med[3])
        ),
    )
}

fn segmentation() -> Outcome {
    let (mut selected, mut ambiguous, mut walls) = (0, 0, Vec::new());
    for seed in 0..50 {
        let mut s = random_lidar_scenario::<f64>(1, 0.0, NoiseModel::new(0.0, 0.0, 0.002).unwrap(), 6000 + seed)
            .map_err(|e| e.to_string())?;
        s.clutter = room_walls();
        let data = generate_lidar(&s).map_err(|e| e.to_string())?;
        match extract_plate_segment(&data.scans[0], 0.5, &SegmentParams::default()) {
            Ok(seg) => {
                let truth = &data.plate_indices[0];
                let inside = seg.indices.iter().filter(|i| truth.contains(i)).count();
                if inside * 10 >= seg.indices.len() * 9 {
                    selected += 1;
                } else {
                    walls.push(seed);
                }
            }
            Err(LidarCamError::AmbiguousSegment { .. }) => ambiguous += 1,
            Err(e) => return Err(format!("seed {seed}: {e}")),
        }
    }
    check(
        selected >= 48 && walls.is_empty(),
        format!("plate selected {selected}/50, ambiguous {ambiguous}, wrong segment {walls:?}"),
    )
}

fn session_verdict() -> Outcome {
    let mut reach = Vec::new();
    for seed in 0..10 {
        let s = random_lidar_scenario::<f64>(8, spread(), NoiseModel::zero(), 7000 + seed).map_err(|e| e.to_string())?;
        let data = generate_lidar(&s).map_err(|e| e.to_string())?;
        let mut state = SessionState::default();
        let mut verdicts = Vec::new();
        for c in data.correspondences {
            state = session_add(&state, c);
            verdicts.push(state.verdict);
        }
        let first = verdicts.iter().position(|v| *v == Verdict::Green);
        let stays = first.is_some_and(|f| verdicts[f..].iter().all(|v| *v == Verdict::Green));
        if !(stays && first.is_some_and(|f| f < 5)) {
            return Err(format!("seed {seed}: verdicts {verdicts:?}"));
        }
        reach.push(first.unwrap() + 1);
    }
    for seed in 0..10 {
        let s = parallel_normal_scenario::<f64>(8, 7100 + seed).map_err(|e| e.to_string())?;
        let data = generate_lidar(&s).map_err(|e| e.to_string())?;
        let mut state = SessionState::default();
        for c in data.correspondences {
            state = session_add(&state, c);
            if state.verdict == Verdict::Green {
                return Err(format!("parallel session {seed} turned green"));
            }
        }
    }
    Ok(format!("clean sessions green at correspondence {reach:?}, 10 parallel sessions never green"))
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let run = |args: &[&str]| -> Result<(), String> {
        let o = Command::new(env!("CARGO_BIN_EXE_calibkit"))
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if o.status.success() {
            Ok(())
        } else {
            Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
        }
    };
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let read = |path: &Path| fs::read(path).map_err(|e| e.to_string());
    let mut files = 0;
    for kind in ["handeye", "lidarcam", "chain"] {
        for run_id in ["a", "b"] {
            run(&["simulate", "--kind", kind, "--seed", "42", "--noise", "0.002,0.001,0.003", "--out", &p(&format!("{kind}_{run_id}.json"))])?;
        }
        for suffix in ["json", "truth.json"] {
            let a = read(&dir.path().join(format!("{kind}_a.{suffix}")))?;
            let b = read(&dir.path().join(format!("{kind}_b.{suffix}")))?;
            if a != b {
                return Err(format!("{kind}.{suffix} differs between runs"));
            }
        }
        let data = String::from_utf8(read(&dir.path().join(format!("{kind}_a.json")))?).unwrap();
        let parsed = DatasetFile::parse(&data).map_err(|e| e.to_string())?;
        if parsed.to_json() != data || DatasetFile::parse(&parsed.to_json()).ok().as_ref() != Some(&parsed) {
            return Err(format!("{kind} dataset does not re-parse equal"));
        }
        files += 2;
    }
    // results written by the calibration commands
    run(&["handeye", "--poses", &p("chain_a.json"), "--out", &p("x.json")])?;
    run(&["lidar", "--data", &p("chain_a.json"), "--out", &p("c.json")])?;
    run(&["chain", "--handeye", &p("x.json"), "--lidar", &p("c.json"), "--fixed-pose", &p("chain_a.json"), "--out", &p("y.json")])?;
    let mut truths: Vec<String> = ["handeye", "lidarcam", "chain"].iter().map(|k| format!("{k}_a.truth.json")).collect();
    truths.extend(["x.json", "c.json", "y.json"].map(String::from));
    for name in truths {
        let text = String::from_utf8(read(&dir.path().join(&name))?).unwrap();
        let parsed = CalibrationFile::parse(&text).map_err(|e| e.to_string())?;
        if parsed.to_json() != text || CalibrationFile::parse(&parsed.to_json()).ok().as_ref() != Some(&parsed) {
            return Err(format!("{name} does not re-parse equal"));
        }
        files += 1;
    }
    Ok(format!("byte-identical reruns for 3 kinds, {files} written files re-parse equal"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("hand-eye exact recovery", handeye_exact_recovery),
        ("hand-eye AX = XB residual", handeye_residual),
        ("refinement monotonicity", refinement_monotone),
        ("LIDAR-camera exact recovery", lidar_exact_recovery),
        ("degeneracy detection", degeneracy_detection),
        ("chain correctness", chain_correctness),
        ("noise-consistency trend", noise_trend),
        ("segmentation among clutter", segmentation),
        ("session verdict", session_verdict),
        ("CLI round-trip determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
