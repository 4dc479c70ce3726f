use nalgebra::{Point3, Vector3};

use super::{FrameId, GeometryError, RigidTransform};
use crate::Real;

/// Minimum camera-origin distance accepted by [`plane_from_pattern_pose`].
pub const MIN_PLANE_DISTANCE: f64 = 1e-6;

/// Plane encoded by the foot point `n` of the perpendicular from the origin:
/// `x` lies on the plane iff `n·x = ‖n‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane<T: Real> {
    n: Vector3<T>,
}

impl<T: Real> Plane<T> {
    pub fn new(n: Vector3<T>) -> Result<Self, GeometryError> {
        let norm = n.norm();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(GeometryError::DegeneratePlane);
        }
        Ok(Self { n })
    }

    /// From a unit normal and a positive distance.
    pub fn from_normal_distance(normal: Vector3<T>, distance: T) -> Result<Self, GeometryError> {
        Self::new(normal.normalize() * distance)
    }

    pub fn vector(&self) -> &Vector3<T> {
        &self.n
    }

    pub fn distance(&self) -> T {
        self.n.norm()
    }

    pub fn normal(&self) -> Vector3<T> {
        self.n / self.n.norm()
    }

    /// `n·x − ‖n‖²`.
    pub fn algebraic_residual(&self, x: &Point3<T>) -> T {
        self.n.dot(&x.coords) - self.n.norm_squared()
    }

    /// Signed point-to-plane distance in the units of `x`.
    pub fn signed_distance(&self, x: &Point3<T>) -> T {
        self.algebraic_residual(x) / self.n.norm()
    }

    pub fn contains(&self, x: &Point3<T>, tol: T) -> bool {
        self.signed_distance(x).abs() <= tol
    }

    pub fn scaled(&self, s: T) -> Result<Self, GeometryError> {
        Self::new(self.n * s)
    }
}

/// Plate plane in camera coordinates from a `Camera ← Pattern` detection.
/// The plate is the `z = 0` plane of the pattern frame.
pub fn plane_from_pattern_pose<T: Real>(
    detection: &RigidTransform<T>,
) -> Result<Plane<T>, GeometryError> {
    detection.expect_frames(&FrameId::Camera, &FrameId::Pattern)?;
    let mut u = detection.transform_vector(&Vector3::z());
    let mut d = u.dot(detection.translation());
    if d.abs() < T::lit(MIN_PLANE_DISTANCE) {
        return Err(GeometryError::DegeneratePlane);
    }
    if d < T::zero() {
        u = -u;
        d = -d;
    }
    Plane::new(u * d)
}
