//! Ground-truth scenarios and error metrics for verifying the solvers.
//!
//! Every generator is a pure function of its scenario and seed. Noise variates
//! are always drawn and then scaled by the configured sigma, so two scenarios
//! that differ only in noise level share the same underlying random numbers.

mod chain;
mod handeye;
mod lidar;

pub use chain::{random_chain_scenario, ChainScenario};
pub use handeye::{
    generate_handeye, max_relative_axis_spread, parallel_axis_scenario, pose_sampler,
    random_handeye_scenario, HandEyeScenario, Workspace,
};
pub use lidar::{
    generate_lidar, parallel_normal_scenario, random_lidar_scenario, random_plate_poses,
    room_walls, LidarDataset, LidarScenario, WallSegment,
};

use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{rotation, FrameId, GeometryError, RigidTransform};
use crate::Real;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("PlateNotVisible: plate positions {indices:?} do not cross the scan plane")]
    PlateNotVisible { indices: Vec<usize> },
    #[error("SamplingFailed: no pose set met the requested axis spread after {attempts} attempts")]
    SamplingFailed { attempts: usize },
    #[error("InvalidScenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel<T: Real> {
    /// Detection rotation noise in radians.
    pub sigma_rot: T,
    /// Detection translation noise in meters, per axis.
    pub sigma_trans: T,
    /// LIDAR range noise in meters.
    pub sigma_range: T,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(sigma_rot: T, sigma_trans: T, sigma_range: T) -> Result<Self, SynthError> {
        let ok = |s: T| s >= T::zero() && s.is_finite();
        if !(ok(sigma_rot) && ok(sigma_trans) && ok(sigma_range)) {
            return Err(SynthError::InvalidScenario("noise sigmas must be finite and non-negative".into()));
        }
        Ok(Self {
            sigma_rot,
            sigma_trans,
            sigma_range,
        })
    }

    pub fn zero() -> Self {
        Self {
            sigma_rot: T::zero(),
            sigma_trans: T::zero(),
            sigma_range: T::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sigma_rot == T::zero() && self.sigma_trans == T::zero() && self.sigma_range == T::zero()
    }

    pub fn scaled(&self, k: T) -> Self {
        Self {
            sigma_rot: self.sigma_rot * k,
            sigma_trans: self.sigma_trans * k,
            sigma_range: self.sigma_range * k,
        }
    }
}

impl<T: Real> Default for NoiseModel<T> {
    fn default() -> Self {
        Self::zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseErrors<T: Real> {
    /// Geodesic angle between the rotations, radians.
    pub rotation_error: T,
    /// Euclidean distance between the translations, meters.
    pub translation_error: T,
}

pub fn pose_error<T: Real>(a: &RigidTransform<T>, b: &RigidTransform<T>) -> Result<PoseErrors<T>, GeometryError> {
    b.expect_frames(a.dst(), a.src())?;
    Ok(PoseErrors {
        rotation_error: rotation::angle_between(a.rotation(), b.rotation()),
        translation_error: (a.translation() - b.translation()).norm(),
    })
}

pub(crate) fn normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    let v: f64 = StandardNormal.sample(rng);
    T::lit(v)
}

pub(crate) fn uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> T {
    T::lit(rng.random_range(lo..=hi))
}

/// Uniformly distributed direction on the unit sphere.
pub(crate) fn unit_vector<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Vector3<T> {
    loop {
        let v = Vector3::new(normal::<T, R>(rng), normal(rng), normal(rng));
        let n = v.norm();
        if n > T::lit(1e-6) {
            return v / n;
        }
    }
}

/// Rotation drawn uniformly from SO(3).
pub(crate) fn random_rotation<T: Real, R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<T> {
    let q = nalgebra::Quaternion::new(normal(rng), normal(rng), normal(rng), normal(rng));
    rotation::canonical(UnitQuaternion::new_normalize(q))
}

/// Perturbs a detection: rotation about a uniform axis by `|N(0, σ_rot)|`,
/// translation by isotropic `N(0, σ_trans)`.
pub(crate) fn perturb_pose<T: Real, R: Rng + ?Sized>(
    pose: &RigidTransform<T>,
    noise: &NoiseModel<T>,
    rng: &mut R,
) -> RigidTransform<T> {
    let axis = unit_vector::<T, R>(rng);
    let angle = normal::<T, R>(rng).abs() * noise.sigma_rot;
    let dt = Vector3::new(normal::<T, R>(rng), normal(rng), normal(rng)) * noise.sigma_trans;
    if noise.sigma_rot == T::zero() && noise.sigma_trans == T::zero() {
        return pose.clone();
    }
    RigidTransform::new(
        rotation::exp(&(axis * angle)) * pose.rotation(),
        pose.translation() + dt,
        pose.dst().clone(),
        pose.src().clone(),
    )
}

/// `T(Lidar ← Camera)` at robot pose `tcp_pose = T(World ← Tcp)` for a LIDAR
/// fixed in the world at `y = T(Lidar ← World)` and a camera mounted by `x`.
pub fn lidar_from_camera<T: Real>(
    y: &RigidTransform<T>,
    x: &RigidTransform<T>,
    tcp_pose: &RigidTransform<T>,
) -> Result<RigidTransform<T>, GeometryError> {
    y.expect_frames(&FrameId::Lidar, &FrameId::World)?;
    x.expect_frames(&FrameId::Camera, &FrameId::Tcp)?;
    tcp_pose.expect_frames(&FrameId::World, &FrameId::Tcp)?;
    y.compose(tcp_pose)?.compose(&x.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn pose_error_examples() {
        let id = RigidTransform::<f64>::identity(FrameId::Camera, FrameId::Tcp);
        let e = pose_error(&id, &id).unwrap();
        assert_eq!((e.rotation_error, e.translation_error), (0.0, 0.0));

        let rz = RigidTransform::from_rotation_vector(
            Vector3::new(0.0, 0.0, FRAC_PI_2),
            Vector3::zeros(),
            FrameId::Camera,
            FrameId::Tcp,
        );
        let e = pose_error(&id, &rz).unwrap();
        assert!((e.rotation_error - FRAC_PI_2).abs() < 1e-15);

        let t = RigidTransform::from_translation(Vector3::new(3.0, 4.0, 0.0), FrameId::Camera, FrameId::Tcp);
        let e = pose_error(&id, &t).unwrap();
        assert_eq!(e.translation_error, 5.0);
    }

    #[test]
    fn pose_error_checks_frames() {
        let a = RigidTransform::<f64>::identity(FrameId::Camera, FrameId::Tcp);
        let b = RigidTransform::<f64>::identity(FrameId::Lidar, FrameId::Tcp);
        assert!(matches!(pose_error(&a, &b), Err(GeometryError::FrameMismatch { .. })));
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(NoiseModel::new(-1.0, 0.0, 0.0).is_err());
    }
}
