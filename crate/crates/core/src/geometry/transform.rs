use nalgebra::{Matrix3, Matrix4, Point3, Quaternion, Rotation3, UnitQuaternion, Vector3};

use super::{rotation, FrameId, GeometryError};
use crate::Real;

/// Rigid motion mapping `src` coordinates into `dst` coordinates:
/// `p_dst = R · p_src + t`.
///
/// The rotation is stored as a unit quaternion with `w ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RigidTransform<T: Real> {
    rotation: UnitQuaternion<T>,
    translation: Vector3<T>,
    dst: FrameId,
    src: FrameId,
}

impl<T: Real> RigidTransform<T> {
    pub fn new(
        rotation: UnitQuaternion<T>,
        translation: Vector3<T>,
        dst: FrameId,
        src: FrameId,
    ) -> Self {
        // renormalize: callers may hand in a quaternion that drifted
        let rotation = rotation::canonical(UnitQuaternion::new_normalize(rotation.into_inner()));
        Self {
            rotation,
            translation,
            dst,
            src,
        }
    }

    pub fn identity(dst: FrameId, src: FrameId) -> Self {
        Self::new(UnitQuaternion::identity(), Vector3::zeros(), dst, src)
    }

    /// Builds from raw `(w, x, y, z)` components, normalizing them.
    pub fn from_parts(
        q: [T; 4],
        translation: Vector3<T>,
        dst: FrameId,
        src: FrameId,
    ) -> Result<Self, GeometryError> {
        let quat = Quaternion::new(q[0], q[1], q[2], q[3]);
        let n = quat.norm();
        if !(n > T::eps()) || !n.is_finite() || !translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidRotation);
        }
        Ok(Self::new(
            UnitQuaternion::new_unchecked(quat / n),
            translation,
            dst,
            src,
        ))
    }

    pub fn from_translation(translation: Vector3<T>, dst: FrameId, src: FrameId) -> Self {
        Self::new(UnitQuaternion::identity(), translation, dst, src)
    }

    /// Rotation given as an axis-angle vector (radians).
    pub fn from_rotation_vector(
        omega: Vector3<T>,
        translation: Vector3<T>,
        dst: FrameId,
        src: FrameId,
    ) -> Self {
        Self::new(rotation::exp(&omega), translation, dst, src)
    }

    /// Reads a homogeneous matrix. The rotation block must be orthonormal
    /// with det +1 (within 1e-6) and the bottom row must be `[0 0 0 1]`.
    pub fn from_matrix(m: &Matrix4<T>, dst: FrameId, src: FrameId) -> Result<Self, GeometryError> {
        let r: Matrix3<T> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let tol = T::lit(1e-6);
        let ortho = (r.transpose() * r - Matrix3::identity()).norm();
        let bottom_ok = m[(3, 0)].abs() <= tol
            && m[(3, 1)].abs() <= tol
            && m[(3, 2)].abs() <= tol
            && (m[(3, 3)] - T::one()).abs() <= tol;
        if !(ortho <= tol) || !((r.determinant() - T::one()).abs() <= tol) || !bottom_ok {
            return Err(GeometryError::NotRigid);
        }
        let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
        let t = Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]);
        Ok(Self::new(q, t, dst, src))
    }

    pub fn rotation(&self) -> &UnitQuaternion<T> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<T> {
        &self.translation
    }

    pub fn dst(&self) -> &FrameId {
        &self.dst
    }

    pub fn src(&self) -> &FrameId {
        &self.src
    }

    pub fn rotation_matrix(&self) -> Matrix3<T> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn to_matrix(&self) -> Matrix4<T> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Rotation angle in [0, π].
    pub fn rotation_angle(&self) -> T {
        rotation::angle(&self.rotation)
    }

    pub fn rotation_vector(&self) -> Vector3<T> {
        rotation::log(&self.rotation)
    }

    /// Same motion with new frame labels.
    pub fn relabel(&self, dst: FrameId, src: FrameId) -> Self {
        Self {
            rotation: self.rotation,
            translation: self.translation,
            dst,
            src,
        }
    }

    pub fn transform_point(&self, p: &Point3<T>) -> Point3<T> {
        Point3::from(self.rotation * p.coords + self.translation)
    }

    pub fn transform_vector(&self, v: &Vector3<T>) -> Vector3<T> {
        self.rotation * v
    }

    /// `self ∘ other`: maps `other.src` into `self.dst`.
    pub fn compose(&self, other: &Self) -> Result<Self, GeometryError> {
        if self.src != other.dst {
            return Err(GeometryError::FrameMismatch {
                expected: self.src.clone(),
                found: other.dst.clone(),
            });
        }
        Ok(self.compose_unchecked(other, self.dst.clone(), other.src.clone()))
    }

    pub(crate) fn compose_unchecked(&self, other: &Self, dst: FrameId, src: FrameId) -> Self {
        let rotation = self.rotation * other.rotation;
        let translation = self.rotation * other.translation + self.translation;
        Self::new(rotation, translation, dst, src)
    }

    pub fn inverse(&self) -> Self {
        let inv = self.rotation.inverse();
        Self::new(
            inv,
            -(inv * self.translation),
            self.src.clone(),
            self.dst.clone(),
        )
    }

    /// Fails unless the frames are exactly `dst ← src`.
    pub fn expect_frames(&self, dst: &FrameId, src: &FrameId) -> Result<(), GeometryError> {
        if &self.dst != dst {
            return Err(GeometryError::FrameMismatch {
                expected: dst.clone(),
                found: self.dst.clone(),
            });
        }
        if &self.src != src {
            return Err(GeometryError::FrameMismatch {
                expected: src.clone(),
                found: self.src.clone(),
            });
        }
        Ok(())
    }

    /// Rigid-motion check on the matrix form: RᵀR = I, det R = +1.
    pub fn is_valid_se3(&self, tol: T) -> bool {
        let r = self.rotation_matrix();
        (r.transpose() * r - Matrix3::identity()).norm() <= tol
            && (r.determinant() - T::one()).abs() <= tol
    }
}

pub fn compose<T: Real>(
    a: &RigidTransform<T>,
    b: &RigidTransform<T>,
) -> Result<RigidTransform<T>, GeometryError> {
    a.compose(b)
}

pub fn invert<T: Real>(t: &RigidTransform<T>) -> RigidTransform<T> {
    t.inverse()
}
