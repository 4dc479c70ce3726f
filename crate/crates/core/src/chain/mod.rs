//! The full calibration chain `Y = C_f · X · B_f`, LIDAR-to-world mapping,
//! image overlays and the incremental calibration session.

mod session;

pub use session::{session_add, verdict_for, SessionConfig, SessionState, Verdict};

use nalgebra::{Point2, Point3};

use crate::geometry::{FrameId, GeometryError, RigidTransform};
use crate::lidarcam::LidarScan;
use crate::Real;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ChainError {
    #[error("InvalidIntrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Pinhole camera without distortion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics<T: Real> {
    fx: T,
    fy: T,
    cx: T,
    cy: T,
    width: T,
    height: T,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: T, height: T) -> Result<Self, ChainError> {
        if !(fx > T::zero() && fy > T::zero()) {
            return Err(ChainError::InvalidIntrinsics("focal lengths must be positive".into()));
        }
        if !(cx >= T::zero() && cx < width && cy >= T::zero() && cy < height) {
            return Err(ChainError::InvalidIntrinsics(
                "principal point must lie inside the image".into(),
            ));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    pub fn fx(&self) -> T {
        self.fx
    }

    pub fn fy(&self) -> T {
        self.fy
    }

    pub fn cx(&self) -> T {
        self.cx
    }

    pub fn cy(&self) -> T {
        self.cy
    }

    pub fn width(&self) -> T {
        self.width
    }

    pub fn height(&self) -> T {
        self.height
    }

    /// Pixel coordinates of a camera-frame point, `None` at or behind the
    /// image plane.
    pub fn project(&self, p: &Point3<T>) -> Option<Point2<T>> {
        if p.z <= T::lit(MIN_DEPTH) {
            return None;
        }
        Some(Point2::new(
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    pub fn in_image(&self, px: &Point2<T>) -> bool {
        px.x >= T::zero() && px.x < self.width && px.y >= T::zero() && px.y < self.height
    }
}

/// Points closer to the camera plane than this are not projected.
pub const MIN_DEPTH: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct ChainResult<T: Real> {
    /// `T(Lidar ← World)`.
    pub y: RigidTransform<T>,
    /// `B_f = T(Tcp ← World)`.
    pub fixed_pose: RigidTransform<T>,
    pub c_f: RigidTransform<T>,
    pub x: RigidTransform<T>,
}

/// `Y = C_f · X · B_f` with `C_f = Lidar ← Camera`, `X = Camera ← Tcp` and
/// `B_f = Tcp ← World`.
pub fn chain_lidar_to_world<T: Real>(
    c_f: &RigidTransform<T>,
    x: &RigidTransform<T>,
    b_f: &RigidTransform<T>,
) -> Result<ChainResult<T>, GeometryError> {
    c_f.expect_frames(&FrameId::Lidar, &FrameId::Camera)?;
    x.expect_frames(&FrameId::Camera, &FrameId::Tcp)?;
    b_f.expect_frames(&FrameId::Tcp, &FrameId::World)?;
    let y = c_f.compose(x)?.compose(b_f)?;
    Ok(ChainResult {
        y,
        fixed_pose: b_f.clone(),
        c_f: c_f.clone(),
        x: x.clone(),
    })
}

/// World coordinates of a LIDAR detection `(x, y)` in the scan plane.
pub fn world_from_lidar<T: Real>(y: &RigidTransform<T>, p: &Point2<T>) -> Result<Point3<T>, GeometryError> {
    y.expect_frames(&FrameId::Lidar, &FrameId::World)?;
    Ok(y.inverse().transform_point(&Point3::new(p.x, p.y, T::zero())))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectedPoint<T: Real> {
    /// NaN when the point is at or behind the camera.
    pub u: T,
    pub v: T,
    pub in_view: bool,
}

/// Projects every scan point into the image, in scan order.
pub fn reproject_scan<T: Real>(
    c_f: &RigidTransform<T>,
    k: &CameraIntrinsics<T>,
    scan: &LidarScan<T>,
) -> Vec<ProjectedPoint<T>> {
    let camera_from_lidar = c_f.inverse();
    scan.points
        .iter()
        .map(|p| {
            let x = camera_from_lidar.transform_point(&Point3::new(p.x, p.y, T::zero()));
            match k.project(&x) {
                Some(px) => ProjectedPoint {
                    u: px.x,
                    v: px.y,
                    in_view: k.in_image(&px),
                },
                None => ProjectedPoint {
                    u: T::lit(f64::NAN),
                    v: T::lit(f64::NAN),
                    in_view: false,
                },
            }
        })
        .collect()
}
