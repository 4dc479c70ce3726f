//! Accurate SO(3) exponential/logarithm on unit quaternions.
//!
//! `acos(w)` loses half the significant digits near the identity, which would
//! cap recovery accuracy around 1e-8 rad. These helpers use `atan2` instead.

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::Real;

/// Unit quaternion with non-negative scalar part.
pub fn canonical<T: Real>(q: UnitQuaternion<T>) -> UnitQuaternion<T> {
    if q.w < T::zero() {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        q
    }
}

pub fn exp<T: Real>(omega: &Vector3<T>) -> UnitQuaternion<T> {
    let theta = omega.norm();
    let half = theta * T::lit(0.5);
    let (w, k) = if theta < T::lit(1e-4) {
        // Taylor: sin(θ/2)/θ = 1/2 - θ²/48
        let t2 = theta * theta;
        (
            T::one() - t2 / T::lit(8.0),
            T::lit(0.5) - t2 / T::lit(48.0),
        )
    } else {
        (half.cos(), half.sin() / theta)
    };
    let q = Quaternion::new(w, omega.x * k, omega.y * k, omega.z * k);
    UnitQuaternion::new_normalize(q)
}

/// Rotation vector of `q` with angle in [0, π].
pub fn log<T: Real>(q: &UnitQuaternion<T>) -> Vector3<T> {
    let q = canonical(*q);
    let v = q.imag();
    let s = v.norm();
    if s < T::lit(1e-12) {
        // 2·atan2(s, w)/s → 2/w
        return v * (T::lit(2.0) / q.w);
    }
    let theta = T::lit(2.0) * s.atan2(q.w);
    v * (theta / s)
}

/// Geodesic rotation angle in [0, π].
pub fn angle<T: Real>(q: &UnitQuaternion<T>) -> T {
    T::lit(2.0) * q.imag().norm().atan2(q.w.abs())
}

/// Angle between two rotations.
pub fn angle_between<T: Real>(a: &UnitQuaternion<T>, b: &UnitQuaternion<T>) -> T {
    angle(&(a.inverse() * b))
}

/// Angle between two undirected lines, in [0, π/2].
pub fn line_angle<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> T {
    let na = a.norm();
    let nb = b.norm();
    if na == T::zero() || nb == T::zero() {
        return T::zero();
    }
    let cross = a.cross(b).norm();
    let dot = a.dot(b).abs();
    cross.atan2(dot)
}
