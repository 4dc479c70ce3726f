//! Extrinsic calibration between a 2D LIDAR and a camera from point-on-plane
//! constraints.
//!
//! Each plate position yields the plate plane `N_l` in camera coordinates and
//! the scan points `P_l` on the plate. Every point, lifted to `(x, y, 0)` and
//! mapped into the camera, must satisfy `N_l · p = ‖N_l‖²`.
//!
//! The result `C` is `T(Lidar ← Camera)`, so that `Y = C · X · B_f` maps world
//! coordinates into the LIDAR frame.

mod segment;
mod solve;

pub use segment::{extract_plate_segment, LidarScan, Line2, ScanOrder, ScanSegment, SegmentParams};
pub use solve::{
    calibrate_lidar_camera, normal_spread, plane_residuals, refine_nonlinear, solve_linear,
    LidarCamOptions, LidarCamResult, PlaneCorrespondence,
};

use crate::geometry::GeometryError;
use crate::Real;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LidarCamError<T: Real> {
    #[error("NoSegmentFound: no line segment passes the fit and length gates")]
    NoSegmentFound,
    #[error("AmbiguousSegment: two candidates with {best} and {runner_up} points; restrict the region of interest")]
    AmbiguousSegment { best: usize, runner_up: usize },
    #[error("DegenerateGeometry: plate normals are too few, parallel or coplanar")]
    DegenerateGeometry,
    #[error("NumericalFailure: {0}")]
    NumericalFailure(String),
    #[error("DidNotConverge: iteration limit reached while the cost was still decreasing")]
    DidNotConverge(Box<LidarCamResult<T>>),
    #[error("InvalidScan: {0}")]
    InvalidScan(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
