use nalgebra::{UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{normal, perturb_pose, random_rotation, uniform, unit_vector, NoiseModel, SynthError};
use crate::geometry::{rotation, FrameId, RigidTransform};
use crate::handeye::HandEyeSample;
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct HandEyeScenario<T: Real> {
    /// `T(Camera ← Tcp)`.
    pub x_gt: RigidTransform<T>,
    /// `T(World ← Pattern)`.
    pub pattern_world: RigidTransform<T>,
    /// Forward-kinematics poses `T(World ← Tcp)`.
    pub tcp_poses: Vec<RigidTransform<T>>,
    pub noise: NoiseModel<T>,
    pub seed: u64,
}

/// Emits one sample per TCP pose with `detection = X · B_k · G`, so that
/// `A_k · X · B_k = G⁻¹` for every `k` when the noise is zero.
pub fn generate_handeye<T: Real>(s: &HandEyeScenario<T>) -> Result<Vec<HandEyeSample<T>>, SynthError> {
    s.x_gt.expect_frames(&FrameId::Camera, &FrameId::Tcp)?;
    s.pattern_world.expect_frames(&FrameId::World, &FrameId::Pattern)?;
    if s.tcp_poses.is_empty() {
        return Err(SynthError::InvalidScenario("at least one TCP pose is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut out = Vec::with_capacity(s.tcp_poses.len());
    for (k, pose) in s.tcp_poses.iter().enumerate() {
        pose.expect_frames(&FrameId::World, &FrameId::Tcp)?;
        let b = pose.inverse();
        let detection = s.x_gt.compose(&b)?.compose(&s.pattern_world)?;
        let detection = perturb_pose(&detection, &s.noise, &mut rng);
        out.push(HandEyeSample::new(detection, b, k)?);
    }
    Ok(out)
}

/// Sampling region for TCP poses.
#[derive(Clone, Debug, PartialEq)]
pub struct Workspace<T: Real> {
    /// Axis-aligned position bounds in the world frame.
    pub min: Vector3<T>,
    pub max: Vector3<T>,
    /// Orientation `World ← Tcp` around which poses are tilted.
    pub nominal: UnitQuaternion<T>,
    /// Largest deviation from `nominal`, radians.
    pub max_tilt: T,
}

impl<T: Real> Workspace<T> {
    /// A box in front of a table-mounted arm with the tool pointing down.
    pub fn tabletop() -> Self {
        Self {
            min: Vector3::new(T::lit(0.3), T::lit(-0.3), T::lit(0.3)),
            max: Vector3::new(T::lit(0.7), T::lit(0.3), T::lit(0.7)),
            nominal: UnitQuaternion::from_axis_angle(&Vector3::x_axis(), T::pi()),
            max_tilt: T::deg(45.0),
        }
    }

    pub fn contains(&self, pose: &RigidTransform<T>) -> bool {
        let t = pose.translation();
        let tol = T::lit(1e-12);
        let inside = (0..3).all(|i| t[i] >= self.min[i] - tol && t[i] <= self.max[i] + tol);
        inside && rotation::angle_between(&self.nominal, pose.rotation()) <= self.max_tilt + tol
    }
}

/// Relative motions with less rotation than this have no usable axis.
const MIN_MOTION_ANGLE: f64 = 1e-3;

/// Largest angle between the rotation axes of any two relative motions
/// `B_j B_i⁻¹` of the given `World ← Tcp` poses.
pub fn max_relative_axis_spread<T: Real>(poses: &[RigidTransform<T>]) -> T {
    let mut axes = Vec::new();
    for i in 0..poses.len() {
        for j in (i + 1)..poses.len() {
            let rel = poses[j].rotation().inverse() * poses[i].rotation();
            let w = rotation::log(&rel);
            if w.norm() > T::lit(MIN_MOTION_ANGLE) {
                axes.push(w.normalize());
            }
        }
    }
    let mut best = T::zero();
    for i in 0..axes.len() {
        for j in (i + 1)..axes.len() {
            best = best.max(rotation::line_angle(&axes[i], &axes[j]));
        }
    }
    best
}

const MAX_REJECTIONS: usize = 10_000;

fn sample_pose<T: Real>(ws: &Workspace<T>, rng: &mut ChaCha8Rng) -> RigidTransform<T> {
    let mut t = Vector3::zeros();
    for i in 0..3 {
        let (lo, hi) = (ws.min[i].as_f64(), ws.max[i].as_f64());
        t[i] = if hi > lo { uniform(rng, lo, hi) } else { ws.min[i] };
    }
    let axis = unit_vector::<T, _>(rng);
    let angle: T = uniform(rng, 0.0, 1.0);
    let tilt = rotation::exp(&(axis * (angle * ws.max_tilt)));
    RigidTransform::new(ws.nominal * tilt, t, FrameId::World, FrameId::Tcp)
}

/// Draws `n` TCP poses (`World ← Tcp`) inside `workspace`, rejecting whole sets
/// until the relative-motion axes span at least `min_axis_spread`.
pub fn pose_sampler<T: Real>(
    n: usize,
    workspace: &Workspace<T>,
    min_axis_spread: T,
    seed: u64,
) -> Result<Vec<RigidTransform<T>>, SynthError> {
    if n < 3 {
        return Err(SynthError::InvalidScenario(format!("pose_sampler needs n >= 3, got {n}")));
    }
    if (0..3).any(|i| workspace.min[i] > workspace.max[i]) || workspace.max_tilt < T::zero() {
        return Err(SynthError::InvalidScenario("workspace bounds are inverted".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REJECTIONS {
        let poses: Vec<_> = (0..n).map(|_| sample_pose(workspace, &mut rng)).collect();
        if min_axis_spread <= T::zero() || max_relative_axis_spread(&poses) >= min_axis_spread {
            return Ok(poses);
        }
    }
    Err(SynthError::SamplingFailed {
        attempts: MAX_REJECTIONS,
    })
}

fn random_x<T: Real>(rng: &mut ChaCha8Rng) -> RigidTransform<T> {
    let t = Vector3::new(normal::<T, _>(rng), normal(rng), normal(rng)) * T::lit(0.1);
    RigidTransform::new(random_rotation(rng), t, FrameId::Camera, FrameId::Tcp)
}

fn pattern_on_table<T: Real>(rng: &mut ChaCha8Rng) -> RigidTransform<T> {
    let yaw: T = uniform(rng, -std::f64::consts::PI, std::f64::consts::PI);
    let t = Vector3::new(uniform(rng, 0.4, 0.6), uniform(rng, -0.1, 0.1), T::zero());
    RigidTransform::new(
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        t,
        FrameId::World,
        FrameId::Pattern,
    )
}

/// Random mounting, pattern and `n` tabletop poses with axis spread of at
/// least `min_axis_spread`.
pub fn random_handeye_scenario<T: Real>(
    n: usize,
    min_axis_spread: T,
    noise: NoiseModel<T>,
    seed: u64,
) -> Result<HandEyeScenario<T>, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let x_gt = random_x(&mut rng);
    let pattern_world = pattern_on_table(&mut rng);
    let tcp_poses = pose_sampler(n, &Workspace::tabletop(), min_axis_spread, seed)?;
    Ok(HandEyeScenario {
        x_gt,
        pattern_world,
        tcp_poses,
        noise,
        seed,
    })
}

/// Degenerate scenario: every TCP pose is a rotation about the world z-axis,
/// so all relative motions share one rotation axis.
pub fn parallel_axis_scenario<T: Real>(n: usize, seed: u64) -> HandEyeScenario<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_gt = random_x(&mut rng);
    let pattern_world = pattern_on_table(&mut rng);
    let tcp_poses = (0..n)
        .map(|_| {
            let yaw: T = uniform(&mut rng, -1.5, 1.5);
            let t = Vector3::new(uniform(&mut rng, 0.3, 0.7), uniform(&mut rng, -0.3, 0.3), uniform(&mut rng, 0.3, 0.7));
            RigidTransform::new(
                UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
                t,
                FrameId::World,
                FrameId::Tcp,
            )
        })
        .collect();
    HandEyeScenario {
        x_gt,
        pattern_world,
        tcp_poses,
        noise: NoiseModel::zero(),
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_chain_sample() {
        let pose = RigidTransform::<f64>::from_rotation_vector(
            Vector3::new(0.1, -0.2, 0.3),
            Vector3::new(0.5, 0.1, 0.4),
            FrameId::World,
            FrameId::Tcp,
        );
        let s = HandEyeScenario {
            x_gt: RigidTransform::identity(FrameId::Camera, FrameId::Tcp),
            pattern_world: RigidTransform::identity(FrameId::World, FrameId::Pattern),
            tcp_poses: vec![pose.clone()],
            noise: NoiseModel::zero(),
            seed: 1,
        };
        let samples = generate_handeye(&s).unwrap();
        // camera == tcp and pattern == world, so the detection is the inverse FK pose
        let inv = pose.inverse();
        assert!((samples[0].detection.to_matrix() - inv.to_matrix()).norm() < 1e-15);
    }

    #[test]
    fn sampler_respects_workspace_and_spread() {
        let ws = Workspace::<f64>::tabletop();
        let poses = pose_sampler(10, &ws, 30f64.to_radians(), 3).unwrap();
        assert_eq!(poses.len(), 10);
        assert!(poses.iter().all(|p| ws.contains(p)));
        assert!(max_relative_axis_spread(&poses) >= 30f64.to_radians());
    }

    #[test]
    fn zero_volume_workspace_fails() {
        let ws = Workspace::<f64> {
            min: Vector3::new(0.5, 0.0, 0.5),
            max: Vector3::new(0.5, 0.0, 0.5),
            nominal: UnitQuaternion::identity(),
            max_tilt: 0.0,
        };
        assert_eq!(
            pose_sampler(5, &ws, 30f64.to_radians(), 0),
            Err(SynthError::SamplingFailed { attempts: 10_000 })
        );
        assert!(pose_sampler(5, &ws, 0.0, 0).is_ok());
    }

    #[test]
    fn too_few_poses() {
        assert!(pose_sampler(2, &Workspace::<f64>::tabletop(), 0.0, 0).is_err());
    }
}
