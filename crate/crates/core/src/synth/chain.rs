use nalgebra::{UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lidar::random_plate_poses;
use super::{lidar_from_camera, random_handeye_scenario, uniform, HandEyeScenario, LidarScenario, NoiseModel, SynthError};
use crate::geometry::{FrameId, RigidTransform};
use crate::Real;

/// A robot-mounted camera and a LIDAR fixed in the world, observed from one
/// fixed robot pose for the LIDAR-camera step.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainScenario<T: Real> {
    pub handeye: HandEyeScenario<T>,
    /// `T(Lidar ← World)`.
    pub y_gt: RigidTransform<T>,
    /// Which of `handeye.tcp_poses` is `B_f`.
    pub fixed_index: usize,
    /// Plate observations taken at the fixed pose; `lidar.c_gt` is `C_f`.
    pub lidar: LidarScenario<T>,
}

impl<T: Real> ChainScenario<T> {
    /// `B_f = T(Tcp ← World)`.
    pub fn fixed_pose(&self) -> RigidTransform<T> {
        self.handeye.tcp_poses[self.fixed_index].inverse()
    }
}

/// LIDAR on a post 1.2 to 1.6 m in front of the robot base facing back at it,
/// `n` robot poses and `m` plate positions seen from the first pose.
pub fn random_chain_scenario<T: Real>(
    n: usize,
    m: usize,
    noise: NoiseModel<T>,
    seed: u64,
) -> Result<ChainScenario<T>, SynthError> {
    let handeye = random_handeye_scenario(n, T::deg(30.0), noise, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2545_f491_4f6c_dd1d);
    let yaw: T = uniform(&mut rng, 160f64.to_radians(), 200f64.to_radians());
    let t = Vector3::new(uniform(&mut rng, 1.2, 1.6), uniform(&mut rng, -0.2, 0.2), uniform(&mut rng, 0.2, 0.5));
    let world_from_lidar = RigidTransform::new(
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
        t,
        FrameId::World,
        FrameId::Lidar,
    );
    let y_gt = world_from_lidar.inverse();
    let fixed_index = 0;
    let c_f = lidar_from_camera(&y_gt, &handeye.x_gt, &handeye.tcp_poses[fixed_index])?;
    let plates = random_plate_poses(m, &c_f, T::deg(30.0), &mut rng)?;
    let mut lidar = LidarScenario::new(c_f, plates, seed.wrapping_add(1));
    lidar.noise = noise;
    Ok(ChainScenario {
        handeye,
        y_gt,
        fixed_index,
        lidar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_truth_chain_closes() {
        let s = random_chain_scenario::<f64>(6, 5, NoiseModel::zero(), 3).unwrap();
        let y = s
            .lidar
            .c_gt
            .compose(&s.handeye.x_gt)
            .unwrap()
            .compose(&s.fixed_pose())
            .unwrap();
        assert!((y.to_matrix() - s.y_gt.to_matrix()).norm() < 1e-12);
        assert_eq!(s.lidar.plate_poses.len(), 5);
    }
}
