use nalgebra::{Unit, UnitQuaternion, Vector3};

use super::{rotation, FrameId, GeometryError, RigidTransform};
use crate::Real;

/// Below this rotation angle the screw axis is undefined.
pub const MIN_SCREW_ANGLE: f64 = 1e-6;

/// Chasles screw: rotation by `angle` about the line `(axis, moment)` and a
/// translation `pitch` along `axis`. The line passes through `axis × moment`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScrewParameters<T: Real> {
    pub axis: Vector3<T>,
    pub moment: Vector3<T>,
    pub angle: T,
    pub pitch: T,
}

impl<T: Real> ScrewParameters<T> {
    /// Closest point of the screw line to the origin.
    pub fn point_on_axis(&self) -> Vector3<T> {
        self.axis.cross(&self.moment)
    }

    pub fn to_transform(&self, dst: FrameId, src: FrameId) -> RigidTransform<T> {
        let q = UnitQuaternion::from_axis_angle(&Unit::new_normalize(self.axis), self.angle);
        let c = self.point_on_axis();
        let t = c - q * c + self.axis * self.pitch;
        RigidTransform::new(q, t, dst, src)
    }
}

pub fn screw_decompose<T: Real>(t: &RigidTransform<T>) -> Result<ScrewParameters<T>, GeometryError> {
    let q = rotation::canonical(*t.rotation());
    let s = q.imag().norm();
    let angle = T::lit(2.0) * s.atan2(q.w);
    if angle < T::lit(MIN_SCREW_ANGLE) {
        return Err(GeometryError::DegenerateMotion);
    }
    let axis = q.imag() / s;
    let tr = t.translation();
    let pitch = axis.dot(tr);
    let perp = tr - axis * pitch;
    // (I − R)c = t⊥ solved in closed form for c ⊥ axis
    let half = angle * T::lit(0.5);
    let c = (perp + axis.cross(&perp) * (half.cos() / half.sin())) * T::lit(0.5);
    let moment = c.cross(&axis);
    Ok(ScrewParameters {
        axis,
        moment,
        angle,
        pitch,
    })
}
