use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use calibkit::chain::{
    chain_lidar_to_world, reproject_scan, session_add, verdict_for, CameraIntrinsics, SessionConfig, SessionState,
};
use calibkit::geometry::{FrameId, RigidTransform};
use calibkit::handeye::{calibrate_handeye, HandEyeError, HandEyeOptions, PairStrategy};
use calibkit::lidarcam::{
    calibrate_lidar_camera, LidarCamError, LidarCamOptions, LidarCamResult, PlaneCorrespondence, SegmentParams,
};
use calibkit::synth::{
    generate_handeye, generate_lidar, pose_error, random_chain_scenario, random_handeye_scenario,
    random_lidar_scenario, room_walls, LidarDataset, LidarScenario, NoiseModel,
};
use serde::Serialize;

use crate::error::{CliError, ExitKind};
use crate::format::{
    read_input, write_output, CalibrationFile, ChainPayload, DatasetFile, HandEyePayload, HandEyeSampleRecord,
    InputDigest, IntrinsicsFile, LidarPayload, Payload, PoseRecord, PositionRecord, Provenance, ScanRecord,
};

/// Plate width assumed when neither the flag nor the dataset gives one.
pub const DEFAULT_PLATE_WIDTH: f64 = 0.5;
/// Robot poses and plate positions generated by `simulate`.
pub const SIM_POSES: usize = 10;
pub const SIM_PLATES: usize = 6;

pub struct HandEyeArgs<'a> {
    pub poses: &'a Path,
    pub out: &'a Path,
    pub strategy: PairStrategy,
    pub max_iters: Option<usize>,
}

pub fn handeye(args: &HandEyeArgs) -> Result<(), CliError> {
    let (text, digest) = read_input(args.poses)?;
    let data = DatasetFile::parse(&text)?;
    let samples = data.handeye()?.to_samples()?;
    let mut opts = HandEyeOptions::default();
    opts.pairs.strategy = args.strategy;
    if let Some(n) = args.max_iters {
        opts.refine.max_iters = n;
    }
    let r = match calibrate_handeye(&samples, &opts) {
        Ok(r) => r,
        Err(HandEyeError::DidNotConverge(r)) => {
            log::warn!("refinement stopped at the iteration limit; writing the last iterate");
            *r
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = CalibrationFile::new(Provenance::new(vec![digest]));
    out.x = Some(PoseRecord::from_transform(&r.x));
    out.metrics.rotation_rms = Some(r.rotation_rms);
    out.metrics.translation_rms = Some(r.translation_rms);
    out.metrics.pairs_used = Some(r.pairs_used);
    write_output(args.out, &out.to_json())?;
    println!(
        "rotation_rms={:.6} deg translation_rms={:.6} mm pairs_used={}",
        r.rotation_rms.to_degrees(),
        r.translation_rms * 1e3,
        r.pairs_used
    );
    Ok(())
}

pub struct LidarArgs<'a> {
    pub data: &'a Path,
    pub out: &'a Path,
    pub expected_length: Option<f64>,
    pub from_scans: bool,
    pub overlay: Option<&'a Path>,
    pub intrinsics: Option<&'a Path>,
}

fn plate_length(flag: Option<f64>, payload: &LidarPayload) -> f64 {
    flag.or(payload.plate_width).unwrap_or_else(|| {
        log::warn!("no --expected-length given and the dataset has no plate_width; assuming {DEFAULT_PLATE_WIDTH} m");
        DEFAULT_PLATE_WIDTH
    })
}

fn lidar_correspondences(
    payload: &LidarPayload,
    from_scans: bool,
    expected_length: Option<f64>,
) -> Result<Vec<PlaneCorrespondence<f64>>, CliError> {
    if from_scans {
        let len = plate_length(expected_length, payload);
        payload.segment_scans(len, &SegmentParams::default())
    } else {
        payload.correspondences()
    }
}

fn solve_lidar(corrs: &[PlaneCorrespondence<f64>]) -> Result<LidarCamResult<f64>, CliError> {
    match calibrate_lidar_camera(corrs, &LidarCamOptions::default()) {
        Ok(r) => Ok(r),
        Err(LidarCamError::DidNotConverge(r)) => {
            log::warn!("refinement stopped at the iteration limit; writing the last iterate");
            Ok(*r)
        }
        Err(e) => Err(e.into()),
    }
}

fn lidar_calibration(r: &LidarCamResult<f64>, inputs: Vec<InputDigest>) -> CalibrationFile {
    let mut out = CalibrationFile::new(Provenance::new(inputs));
    out.c_f = Some(PoseRecord::from_transform(&r.c));
    out.metrics.plane_rms = Some(r.plane_rms);
    out.metrics.correspondences_used = Some(r.correspondences_used);
    out
}

pub fn lidar(args: &LidarArgs) -> Result<(), CliError> {
    let (text, digest) = read_input(args.data)?;
    let data = DatasetFile::parse(&text)?;
    let payload = data.lidarcam()?;
    let mut inputs = vec![digest];
    // validate the overlay inputs before solving
    let intrinsics = match (args.overlay, args.intrinsics) {
        (Some(_), Some(p)) => {
            let (text, digest) = read_input(p)?;
            inputs.push(digest);
            Some(parse_intrinsics(&text)?)
        }
        (Some(_), None) => return Err(CliError::input("--overlay requires --intrinsics")),
        _ => None,
    };
    let corrs = lidar_correspondences(payload, args.from_scans, args.expected_length)?;
    let r = solve_lidar(&corrs)?;
    let verdict = verdict_for(&SessionConfig::default(), Some(&r), &corrs);
    write_output(args.out, &lidar_calibration(&r, inputs).to_json())?;
    if let (Some(path), Some(k)) = (args.overlay, intrinsics) {
        write_overlay(path, &r.c, &k, payload)?;
    }
    println!(
        "verdict={verdict} plane_rms={:.6} mm correspondences_used={}",
        r.plane_rms * 1e3,
        r.correspondences_used
    );
    Ok(())
}

fn parse_intrinsics(text: &str) -> Result<CameraIntrinsics<f64>, CliError> {
    let f: IntrinsicsFile =
        serde_json::from_str(text).map_err(|e| CliError::input(format!("invalid intrinsics: {e}")))?;
    CameraIntrinsics::new(f.fx, f.fy, f.cx, f.cy, f.width, f.height).map_err(|e| CliError::input(e.to_string()))
}

#[derive(Serialize)]
struct OverlayRow {
    position: usize,
    u: f64,
    v: f64,
    in_view: u8,
}

fn write_overlay(
    path: &Path,
    c_f: &RigidTransform<f64>,
    k: &CameraIntrinsics<f64>,
    payload: &LidarPayload,
) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::input(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for (pos, scan) in payload.positions.iter().zip(payload.scans()?) {
        for p in reproject_scan(c_f, k, &scan) {
            w.serialize(OverlayRow {
                position: pos.index,
                u: p.u,
                v: p.v,
                in_view: p.in_view as u8,
            })
            .map_err(io)?;
        }
    }
    w.flush().map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

pub struct WatchArgs<'a> {
    pub dir: &'a Path,
    pub out: Option<&'a Path>,
    pub expected_length: Option<f64>,
    pub from_scans: bool,
    pub once: bool,
    pub max_files: Option<usize>,
    pub poll: Duration,
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::input(format!("cannot read {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Streams plate positions from files appearing in a directory and re-solves
/// after each one. Files are processed once, in name order. A file that does
/// not parse is skipped until its size changes, since it may still be being
/// written.
pub fn watch(args: &WatchArgs) -> Result<(), CliError> {
    let mut state = SessionState::<f64>::default();
    let mut done = BTreeSet::new();
    let mut failed: BTreeMap<PathBuf, u64> = BTreeMap::new();
    let mut inputs = Vec::new();
    let mut processed = 0usize;
    loop {
        for path in json_files(args.dir)? {
            if done.contains(&path) {
                continue;
            }
            if args.max_files.is_some_and(|n| processed >= n) {
                break;
            }
            let len = fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
            if failed.get(&path) == Some(&len) {
                continue;
            }
            let parsed = read_input(&path).and_then(|(text, digest)| {
                let data = DatasetFile::parse(&text)?;
                let corrs = lidar_correspondences(data.lidarcam()?, args.from_scans, args.expected_length)?;
                Ok((corrs, digest))
            });
            let (corrs, digest) = match parsed {
                Ok(v) => v,
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    failed.insert(path, len);
                    continue;
                }
            };
            failed.remove(&path);
            for c in corrs {
                state = session_add(&state, c);
            }
            inputs.push(digest);
            done.insert(path.clone());
            processed += 1;
            let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            match &state.current {
                Some(r) => println!(
                    "{name}: verdict={} plane_rms={:.6} mm correspondences={}",
                    state.verdict,
                    r.plane_rms * 1e3,
                    state.correspondences.len()
                ),
                None => println!(
                    "{name}: verdict={} plane_rms=n/a correspondences={}",
                    state.verdict,
                    state.correspondences.len()
                ),
            }
            if let (Some(out), Some(r)) = (args.out, &state.current) {
                write_output(out, &lidar_calibration(r, inputs.clone()).to_json())?;
            }
        }
        if args.once || args.max_files.is_some_and(|n| processed >= n) {
            return Ok(());
        }
        thread::sleep(args.poll);
    }
}

fn load_calibration(path: &Path) -> Result<(CalibrationFile, InputDigest), CliError> {
    let (text, digest) = read_input(path)?;
    Ok((CalibrationFile::parse(&text)?, digest))
}

/// The pose a calibration file carries under `name`, or its only pose when the
/// name is absent so that the frame check reports what was passed in.
fn pose_for(file: &CalibrationFile, name: &str, path: &Path) -> Result<RigidTransform<f64>, CliError> {
    let poses = file.poses();
    match poses.iter().find(|(n, _)| *n == name).or(poses.first()) {
        Some((_, p)) => p.to_transform(),
        None => Err(CliError::input(format!("{} contains no pose", path.display()))),
    }
}

/// `--fixed-pose` is either a chain dataset or a bare pose record, in either
/// orientation.
fn load_fixed_pose(path: &Path) -> Result<(RigidTransform<f64>, InputDigest), CliError> {
    let (text, digest) = read_input(path)?;
    let record = match DatasetFile::parse(&text) {
        Ok(DatasetFile {
            payload: Payload::Chain(c),
            ..
        }) => c.fixed_pose,
        Ok(d) => {
            return Err(CliError::input(format!(
                "{}: dataset kind {:?} carries no fixed pose",
                path.display(),
                d.kind()
            )))
        }
        Err(_) => serde_json::from_str::<PoseRecord>(&text)
            .map_err(|e| CliError::input(format!("invalid fixed pose {}: {e}", path.display())))?,
    };
    let t = record.to_transform()?;
    let t = if t.dst() == &FrameId::World && t.src() == &FrameId::Tcp {
        t.inverse()
    } else {
        t
    };
    Ok((t, digest))
}

pub fn chain(handeye: &Path, lidar: &Path, fixed_pose: &Path, out: &Path) -> Result<(), CliError> {
    let (he, d1) = load_calibration(handeye)?;
    let (lc, d2) = load_calibration(lidar)?;
    let (b_f, d3) = load_fixed_pose(fixed_pose)?;
    let x = pose_for(&he, "x", handeye)?;
    let c_f = pose_for(&lc, "c_f", lidar)?;
    let r = chain_lidar_to_world(&c_f, &x, &b_f)?;
    let mut file = CalibrationFile::new(Provenance::new(vec![d1, d2, d3]));
    file.y = Some(PoseRecord::from_transform(&r.y));
    write_output(out, &file.to_json())?;
    // round-off below the printed precision would otherwise show as -0.000000000
    let m = r.y.to_matrix().map(|v| if v.abs() < 5e-10 { 0.0 } else { v });
    for i in 0..4 {
        println!(
            "{:.9} {:.9} {:.9} {:.9}",
            m[(i, 0)],
            m[(i, 1)],
            m[(i, 2)],
            m[(i, 3)]
        );
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimKind {
    Handeye,
    Lidarcam,
    Chain,
}

pub fn parse_noise(s: &str) -> Result<NoiseModel<f64>, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::input(format!("--noise expects \"rot,trans,range\", got {s:?}")));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .parse::<f64>()
            .map_err(|_| CliError::input(format!("--noise component {p:?} is not a number")))?;
    }
    Ok(NoiseModel::new(v[0], v[1], v[2])?)
}

/// `data.json` → `data.truth.json`.
pub fn truth_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.json"))
}

fn handeye_payload(samples: &[calibkit::handeye::HandEyeSample<f64>]) -> HandEyePayload {
    HandEyePayload {
        samples: samples
            .iter()
            .map(|s| HandEyeSampleRecord {
                index: s.index,
                detection: PoseRecord::from_transform(&s.detection),
                tcp_pose: PoseRecord::from_transform(&s.tcp_pose_inv.inverse()),
            })
            .collect(),
    }
}

fn lidar_payload(s: &LidarScenario<f64>, d: &LidarDataset<f64>) -> LidarPayload {
    let with_scans = !s.clutter.is_empty();
    LidarPayload {
        plate_width: Some(s.plate_width),
        positions: d
            .correspondences
            .iter()
            .zip(&d.scans)
            .enumerate()
            .map(|(k, (c, scan))| PositionRecord {
                index: k,
                plane: (*c.plane.vector()).into(),
                points: Some(c.segment.points.iter().map(|p| [p.x, p.y]).collect()),
                scan: with_scans.then(|| ScanRecord::from_scan(scan)),
            })
            .collect(),
    }
}

pub fn simulate(kind: SimKind, seed: u64, noise: NoiseModel<f64>, clutter: bool, out: &Path) -> Result<(), CliError> {
    let spread = 30f64.to_radians();
    let mut truth = CalibrationFile::new(Provenance::synthetic(seed));
    let payload = match kind {
        SimKind::Handeye => {
            let s = random_handeye_scenario(SIM_POSES, spread, noise, seed)?;
            truth.x = Some(PoseRecord::from_transform(&s.x_gt));
            Payload::Handeye(handeye_payload(&generate_handeye(&s)?))
        }
        SimKind::Lidarcam => {
            let mut s = random_lidar_scenario(SIM_PLATES, spread, noise, seed)?;
            if clutter {
                s.clutter = room_walls();
            }
            truth.c_f = Some(PoseRecord::from_transform(&s.c_gt));
            Payload::Lidarcam(lidar_payload(&s, &generate_lidar(&s)?))
        }
        SimKind::Chain => {
            let mut s = random_chain_scenario(SIM_POSES, SIM_PLATES, noise, seed)?;
            if clutter {
                s.lidar.clutter = room_walls();
            }
            truth.x = Some(PoseRecord::from_transform(&s.handeye.x_gt));
            truth.c_f = Some(PoseRecord::from_transform(&s.lidar.c_gt));
            truth.y = Some(PoseRecord::from_transform(&s.y_gt));
            Payload::Chain(ChainPayload {
                fixed_pose: PoseRecord::from_transform(&s.fixed_pose()),
                handeye: handeye_payload(&generate_handeye(&s.handeye)?),
                lidarcam: lidar_payload(&s.lidar, &generate_lidar(&s.lidar)?),
            })
        }
    };
    write_output(out, &DatasetFile::new(payload).to_json())?;
    write_output(&truth_path(out), &truth.to_json())?;
    Ok(())
}

#[derive(Serialize)]
struct PoseErrorRecord {
    pose: &'static str,
    rotation_error: f64,
    translation_error: f64,
}

pub fn evaluate(result: &Path, truth: &Path, json: bool) -> Result<(), CliError> {
    let (r, _) = load_calibration(result)?;
    let (t, _) = load_calibration(truth)?;
    let mut rows = Vec::new();
    for (name, rp) in r.poses() {
        let Some((_, tp)) = t.poses().into_iter().find(|(n, _)| *n == name) else {
            continue;
        };
        let e = pose_error(&tp.to_transform()?, &rp.to_transform()?)?;
        rows.push(PoseErrorRecord {
            pose: name,
            rotation_error: e.rotation_error,
            translation_error: e.translation_error,
        });
    }
    if rows.is_empty() {
        // nothing shares a name: compare the single poses so a frame
        // mismatch is reported as such
        if let ([(_, rp)], [(_, tp)]) = (r.poses().as_slice(), t.poses().as_slice()) {
            pose_error(&tp.to_transform()?, &rp.to_transform()?)?;
        }
        return Err(CliError::new(ExitKind::Input, "result and truth share no pose"));
    }
    if json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("rows serialize"));
    } else {
        for e in &rows {
            println!(
                "{}: rotation_error={:.3} deg translation_error={:.3} mm",
                e.pose,
                e.rotation_error.to_degrees(),
                e.translation_error * 1e3
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_flag_parsing() {
        let n = parse_noise("0.001, 0.002,0.003").unwrap();
        assert_eq!((n.sigma_rot, n.sigma_trans, n.sigma_range), (0.001, 0.002, 0.003));
        assert!(parse_noise("0,0,-1").is_err());
        assert!(parse_noise("0,0").is_err());
        assert!(parse_noise("a,0,0").is_err());
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(truth_path(Path::new("/tmp/run/data.json")), Path::new("/tmp/run/data.truth.json"));
        assert_eq!(truth_path(Path::new("data")), Path::new("data.truth.json"));
    }
}
