//! On-disk formats. Datasets and results are pretty-printed JSON documents
//! in meters and radians; overlays are CSV.

use std::fs;
use std::path::Path;

use calibkit::geometry::{FrameId, Plane, RigidTransform};
use calibkit::handeye::HandEyeSample;
use calibkit::lidarcam::{extract_plate_segment, LidarScan, PlaneCorrespondence, ScanSegment, SegmentParams};
use nalgebra::{Point2, Vector3};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// Quaternions further than this from unit norm are reported on load.
const NORM_WARN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Handeye,
    Lidarcam,
    Chain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length: String,
    pub angle: String,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            length: "m".into(),
            angle: "rad".into(),
        }
    }
}

/// `T(dst ← src)` as a unit quaternion and a translation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub dst: String,
    pub src: String,
    pub qw: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl PoseRecord {
    pub fn from_transform(t: &RigidTransform<f64>) -> Self {
        let q = t.rotation().quaternion();
        let v = t.translation();
        Self {
            dst: t.dst().label().to_string(),
            src: t.src().label().to_string(),
            qw: q.w,
            qx: q.i,
            qy: q.j,
            qz: q.k,
            tx: v.x,
            ty: v.y,
            tz: v.z,
        }
    }

    pub fn to_transform(&self) -> Result<RigidTransform<f64>, CliError> {
        let norm = (self.qw * self.qw + self.qx * self.qx + self.qy * self.qy + self.qz * self.qz).sqrt();
        if (norm - 1.0).abs() > NORM_WARN {
            log::warn!(
                "quaternion of {}<-{} has norm {norm}, normalizing",
                self.dst,
                self.src
            );
        }
        RigidTransform::from_parts(
            [self.qw, self.qx, self.qy, self.qz],
            Vector3::new(self.tx, self.ty, self.tz),
            FrameId::from_label(&self.dst),
            FrameId::from_label(&self.src),
        )
        .map_err(|e| CliError::input(format!("pose {}<-{}: {e}", self.dst, self.src)))
    }
}

/// Accepts `dst ← src` as written or its inverse `src ← dst`.
pub fn oriented(pose: &PoseRecord, dst: FrameId, src: FrameId) -> Result<RigidTransform<f64>, CliError> {
    let t = pose.to_transform()?;
    if t.dst() == &dst && t.src() == &src {
        Ok(t)
    } else if t.dst() == &src && t.src() == &dst {
        Ok(t.inverse())
    } else {
        t.expect_frames(&dst, &src)?;
        unreachable!("frames differ but expect_frames passed")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandEyeSampleRecord {
    pub index: usize,
    /// Pattern pose seen by the camera, `Camera ← Pattern`.
    pub detection: PoseRecord,
    /// Forward-kinematics pose `World ← Tcp` (or its inverse).
    pub tcp_pose: PoseRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HandEyePayload {
    pub samples: Vec<HandEyeSampleRecord>,
}

impl HandEyePayload {
    pub fn to_samples(&self) -> Result<Vec<HandEyeSample<f64>>, CliError> {
        self.samples
            .iter()
            .map(|s| {
                let detection = oriented(&s.detection, FrameId::Camera, FrameId::Pattern)?;
                let b = oriented(&s.tcp_pose, FrameId::Tcp, FrameId::World)?;
                Ok(HandEyeSample::new(detection, b, s.index)?)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRecord {
    pub points: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bearings: Option<Vec<f64>>,
}

impl ScanRecord {
    pub fn from_scan(scan: &LidarScan<f64>) -> Self {
        Self {
            points: scan.points.iter().map(|p| [p.x, p.y]).collect(),
            bearings: scan.bearings.clone(),
        }
    }

    pub fn to_scan(&self) -> Result<LidarScan<f64>, CliError> {
        let points = self.points.iter().map(|p| Point2::new(p[0], p[1])).collect();
        match &self.bearings {
            Some(b) => Ok(LidarScan::with_bearings(points, b.clone())?),
            None => Ok(LidarScan::new(points)),
        }
    }
}

/// One plate position: the plane `N` in camera coordinates and either the
/// plate points already cut out of the scan or the whole scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionRecord {
    pub index: usize,
    pub plane: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LidarPayload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plate_width: Option<f64>,
    pub positions: Vec<PositionRecord>,
}

impl LidarPayload {
    fn plane(p: &PositionRecord) -> Result<Plane<f64>, CliError> {
        Plane::new(Vector3::from(p.plane)).map_err(|e| CliError::input(format!("position {}: {e}", p.index)))
    }

    /// Correspondences from the stored plate points.
    pub fn correspondences(&self) -> Result<Vec<PlaneCorrespondence<f64>>, CliError> {
        self.positions
            .iter()
            .map(|p| {
                let pts = p.points.as_ref().ok_or_else(|| {
                    CliError::input(format!(
                        "position {} has no plate points; pass --from-scans to segment its scan",
                        p.index
                    ))
                })?;
                let pts = pts.iter().map(|q| Point2::new(q[0], q[1])).collect();
                Ok(PlaneCorrespondence::new(Self::plane(p)?, ScanSegment::from_points(pts, p.index)))
            })
            .collect()
    }

    /// Correspondences from segmenting every stored scan.
    pub fn segment_scans(
        &self,
        expected_length: f64,
        params: &SegmentParams<f64>,
    ) -> Result<Vec<PlaneCorrespondence<f64>>, CliError> {
        self.positions
            .iter()
            .map(|p| {
                let scan = p
                    .scan
                    .as_ref()
                    .ok_or_else(|| CliError::input(format!("position {} has no scan", p.index)))?
                    .to_scan()?;
                let mut seg = extract_plate_segment(&scan, expected_length, params).map_err(|e| {
                    let mut err = CliError::from(e);
                    err.message = format!("position {}: {}", p.index, err.message);
                    err
                })?;
                seg.position_index = p.index;
                Ok(PlaneCorrespondence::new(Self::plane(p)?, seg))
            })
            .collect()
    }

    /// Scans in position order, falling back to the plate points.
    pub fn scans(&self) -> Result<Vec<LidarScan<f64>>, CliError> {
        self.positions
            .iter()
            .map(|p| match (&p.scan, &p.points) {
                (Some(s), _) => s.to_scan(),
                (None, Some(pts)) => Ok(LidarScan::new(pts.iter().map(|q| Point2::new(q[0], q[1])).collect())),
                (None, None) => Err(CliError::input(format!("position {} has neither scan nor points", p.index))),
            })
            .collect()
    }
}

/// A single data set for both calibration steps, taken with one fixed robot
/// pose for the LIDAR-camera part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainPayload {
    /// `Tcp ← World` (or its inverse) at which the plate positions were taken.
    pub fixed_pose: PoseRecord,
    pub handeye: HandEyePayload,
    pub lidarcam: LidarPayload,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Handeye(HandEyePayload),
    Lidarcam(LidarPayload),
    Chain(ChainPayload),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFile {
    pub version: u32,
    pub units: Units,
    pub payload: Payload,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    version: u32,
    kind: DatasetKind,
    units: Units,
    payload: Value,
}

fn payload_from<T: serde::de::DeserializeOwned>(v: Value, kind: &str) -> Result<T, CliError> {
    serde_json::from_value(v).map_err(|e| CliError::input(format!("invalid {kind} payload: {e}")))
}

fn check_version(v: u32) -> Result<(), CliError> {
    if v != FORMAT_VERSION {
        return Err(CliError::input(format!(
            "unsupported format version {v}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

impl DatasetFile {
    pub fn new(payload: Payload) -> Self {
        Self {
            version: FORMAT_VERSION,
            units: Units::default(),
            payload,
        }
    }

    pub fn kind(&self) -> DatasetKind {
        match self.payload {
            Payload::Handeye(_) => DatasetKind::Handeye,
            Payload::Lidarcam(_) => DatasetKind::Lidarcam,
            Payload::Chain(_) => DatasetKind::Chain,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawDataset =
            serde_json::from_str(text).map_err(|e| CliError::input(format!("invalid dataset: {e}")))?;
        check_version(raw.version)?;
        if raw.units != Units::default() {
            return Err(CliError::input(format!(
                "units must be {{length: m, angle: rad}}, found {{length: {}, angle: {}}}",
                raw.units.length, raw.units.angle
            )));
        }
        let payload = match raw.kind {
            DatasetKind::Handeye => Payload::Handeye(payload_from(raw.payload, "handeye")?),
            DatasetKind::Lidarcam => Payload::Lidarcam(payload_from(raw.payload, "lidarcam")?),
            DatasetKind::Chain => Payload::Chain(payload_from(raw.payload, "chain")?),
        };
        Ok(Self {
            version: raw.version,
            units: raw.units,
            payload,
        })
    }

    pub fn to_json(&self) -> String {
        let payload = match &self.payload {
            Payload::Handeye(p) => serde_json::to_value(p),
            Payload::Lidarcam(p) => serde_json::to_value(p),
            Payload::Chain(p) => serde_json::to_value(p),
        }
        .expect("payload serializes");
        let raw = RawDataset {
            version: self.version,
            kind: self.kind(),
            units: self.units.clone(),
            payload,
        };
        pretty(&raw)
    }

    pub fn handeye(&self) -> Result<&HandEyePayload, CliError> {
        match &self.payload {
            Payload::Handeye(p) => Ok(p),
            Payload::Chain(c) => Ok(&c.handeye),
            Payload::Lidarcam(_) => Err(CliError::input("dataset kind lidarcam has no hand-eye samples")),
        }
    }

    pub fn lidarcam(&self) -> Result<&LidarPayload, CliError> {
        match &self.payload {
            Payload::Lidarcam(p) => Ok(p),
            Payload::Chain(c) => Ok(&c.lidarcam),
            Payload::Handeye(_) => Err(CliError::input("dataset kind handeye has no plate positions")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation_rms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation_rms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plane_rms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs_used: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correspondences_used: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool_version: String,
    #[serde(default)]
    pub inputs: Vec<InputDigest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl Provenance {
    pub fn new(inputs: Vec<InputDigest>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs,
            seed: None,
            timestamp: Some(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        }
    }

    /// Provenance of generated data: seed instead of a timestamp so repeated
    /// runs produce identical bytes.
    pub fn synthetic(seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: Vec::new(),
            seed: Some(seed),
            timestamp: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub version: u32,
    /// `Camera ← Tcp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<PoseRecord>,
    /// `Lidar ← Camera`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_f: Option<PoseRecord>,
    /// `Lidar ← World`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<PoseRecord>,
    #[serde(default)]
    pub metrics: Metrics,
    pub provenance: Provenance,
}

impl CalibrationFile {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            version: FORMAT_VERSION,
            x: None,
            c_f: None,
            y: None,
            metrics: Metrics::default(),
            provenance,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let f: Self =
            serde_json::from_str(text).map_err(|e| CliError::input(format!("invalid calibration file: {e}")))?;
        check_version(f.version)?;
        for p in [&f.x, &f.c_f, &f.y].into_iter().flatten() {
            p.to_transform()?;
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        pretty(self)
    }

    /// Named poses present in the file, in `x, c_f, y` order.
    pub fn poses(&self) -> Vec<(&'static str, &PoseRecord)> {
        [("x", &self.x), ("c_f", &self.c_f), ("y", &self.y)]
            .into_iter()
            .filter_map(|(n, p)| p.as_ref().map(|p| (n, p)))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsFile {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

/// Reads a file and records its digest.
pub fn read_input(path: &Path) -> Result<(String, InputDigest), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let digest = InputDigest {
        path: path.display().to_string(),
        sha256: format!("{:x}", Sha256::digest(&bytes)),
    };
    let text = String::from_utf8(bytes).map_err(|_| CliError::input(format!("{} is not UTF-8", path.display())))?;
    Ok((text, digest))
}

pub fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose_json() -> &'static str {
        r#"{"dst":"Camera","src":"Pattern","qw":1.0,"qx":0.0,"qy":0.0,"qz":0.0,"tx":0.0,"ty":0.0,"tz":1.0}"#
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"version":1,"kind":"handeye","units":{"length":"m","angle":"rad"},"payload":{"samples":[]},"extra":1}"#;
        assert!(DatasetFile::parse(text).is_err());
        let text = r#"{"version":1,"kind":"handeye","units":{"length":"m","angle":"rad"},"payload":{"samples":[],"x":1}}"#;
        assert!(DatasetFile::parse(text).is_err());
    }

    #[test]
    fn wrong_version_and_units_rejected() {
        let text = r#"{"version":2,"kind":"handeye","units":{"length":"m","angle":"rad"},"payload":{"samples":[]}}"#;
        assert!(DatasetFile::parse(text).is_err());
        let text = r#"{"version":1,"kind":"handeye","units":{"length":"mm","angle":"rad"},"payload":{"samples":[]}}"#;
        assert!(DatasetFile::parse(text).is_err());
    }

    #[test]
    fn pose_round_trip() {
        let p: PoseRecord = serde_json::from_str(pose_json()).unwrap();
        let t = p.to_transform().unwrap();
        assert_eq!(PoseRecord::from_transform(&t), p);
    }

    #[test]
    fn quaternion_normalized_on_load() {
        let p = PoseRecord {
            qw: 2.0,
            ..serde_json::from_str(pose_json()).unwrap()
        };
        let t = p.to_transform().unwrap();
        assert!((t.rotation().quaternion().norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_orientation_accepted() {
        let p = PoseRecord {
            dst: "Pattern".into(),
            src: "Camera".into(),
            ..serde_json::from_str(pose_json()).unwrap()
        };
        let t = oriented(&p, FrameId::Camera, FrameId::Pattern).unwrap();
        assert_eq!(t.translation().z, -1.0);
        assert!(oriented(&p, FrameId::Lidar, FrameId::Camera).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let f = DatasetFile::new(Payload::Lidarcam(LidarPayload {
            plate_width: Some(0.5),
            positions: vec![PositionRecord {
                index: 3,
                plane: [0.0, 0.0, 1.5],
                points: Some(vec![[0.1, 1.0], [0.2, 1.0]]),
                scan: None,
            }],
        }));
        let text = f.to_json();
        assert_eq!(DatasetFile::parse(&text).unwrap(), f);
        assert_eq!(DatasetFile::parse(&text).unwrap().to_json(), text);
    }
}
