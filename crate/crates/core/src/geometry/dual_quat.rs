use std::ops::{Mul, Neg};

use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use super::{FrameId, RigidTransform};
use crate::Real;

/// Dual quaternion `real + ε·dual`.
///
/// For a rigid motion `(q, t)` the unit form is `real = q`,
/// `dual = ½·(0, t)·q`, which satisfies `‖real‖ = 1` and `real·dual = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DualQuaternion<T: Real> {
    pub real: Quaternion<T>,
    pub dual: Quaternion<T>,
}

impl<T: Real> DualQuaternion<T> {
    pub fn new(real: Quaternion<T>, dual: Quaternion<T>) -> Self {
        Self { real, dual }
    }

    pub fn identity() -> Self {
        Self::new(Quaternion::identity(), Quaternion::new(T::zero(), T::zero(), T::zero(), T::zero()))
    }

    pub fn from_transform(t: &RigidTransform<T>) -> Self {
        let q = t.rotation().into_inner();
        let tv = t.translation();
        let pure = Quaternion::new(T::zero(), tv.x, tv.y, tv.z);
        Self::new(q, pure * q * T::lit(0.5))
    }

    /// Recovers the rigid motion, normalizing the real part first.
    pub fn to_transform(&self, dst: FrameId, src: FrameId) -> RigidTransform<T> {
        let n = self.real.norm();
        let real = self.real / n;
        let dual = self.dual / n;
        let t = (dual * real.conjugate()) * T::lit(2.0);
        RigidTransform::new(
            UnitQuaternion::new_unchecked(real),
            Vector3::new(t.i, t.j, t.k),
            dst,
            src,
        )
    }

    /// `‖real‖ − 1` and `real·dual`; both vanish for a unit dual quaternion.
    pub fn unit_defects(&self) -> (T, T) {
        (self.real.norm() - T::one(), self.real.dot(&self.dual))
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.real.conjugate(), self.dual.conjugate())
    }

    /// Components as `[w, x, y, z, w', x', y', z']`.
    pub fn to_array(&self) -> [T; 8] {
        let (r, d) = (&self.real, &self.dual);
        [r.w, r.i, r.j, r.k, d.w, d.i, d.j, d.k]
    }
}

impl<T: Real> Mul for DualQuaternion<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.real * rhs.real,
            self.real * rhs.dual + self.dual * rhs.real,
        )
    }
}

impl<T: Real> Neg for DualQuaternion<T> {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.real, -self.dual)
    }
}

pub fn to_dual_quaternion<T: Real>(t: &RigidTransform<T>) -> DualQuaternion<T> {
    DualQuaternion::from_transform(t)
}
