//! Extrinsic calibration for a robot-mounted camera and a fixed 2D LIDAR.
//!
//! * [`handeye`] estimates `X = T(Camera ← Tcp)` from paired robot and
//!   pattern-detection motions (`A X = X B`).
//! * [`lidarcam`] estimates `C = T(Lidar ← Camera)` from plate planes seen by
//!   the camera and plate points seen by the LIDAR.
//! * [`chain`] composes `Y = C_f · X · B_f = T(Lidar ← World)` and runs an
//!   incremental session with a red/yellow/green quality verdict.
//! * [`synth`] generates ground-truth scenarios for all of the above.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`); the `*64` aliases below name the double-precision forms.
// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod geometry;
pub mod handeye;
pub mod lidarcam;
mod lsq;
mod scalar;
pub mod synth;

pub use lsq::DampedOptions;
pub use scalar::Real;

pub type RigidTransform64 = geometry::RigidTransform<f64>;
pub type RigidTransform32 = geometry::RigidTransform<f32>;
pub type Plane64 = geometry::Plane<f64>;
pub type DualQuaternion64 = geometry::DualQuaternion<f64>;
pub type HandEyeSample64 = handeye::HandEyeSample<f64>;
pub type HandEyeResult64 = handeye::HandEyeResult<f64>;
pub type HandEyeOptions64 = handeye::HandEyeOptions<f64>;
pub type HandEyeError64 = handeye::HandEyeError<f64>;
pub type LidarScan64 = lidarcam::LidarScan<f64>;
pub type ScanSegment64 = lidarcam::ScanSegment<f64>;
pub type PlaneCorrespondence64 = lidarcam::PlaneCorrespondence<f64>;
pub type LidarCamResult64 = lidarcam::LidarCamResult<f64>;
pub type LidarCamOptions64 = lidarcam::LidarCamOptions<f64>;
pub type LidarCamError64 = lidarcam::LidarCamError<f64>;
pub type CameraIntrinsics64 = chain::CameraIntrinsics<f64>;
pub type SessionState64 = chain::SessionState<f64>;
pub type NoiseModel64 = synth::NoiseModel<f64>;
