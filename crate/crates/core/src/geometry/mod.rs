//! Frame-labelled rigid transforms, dual quaternions, screw motion and planes.
//!
//! Convention: a transform `T(dst ← src)` maps source coordinates into
//! destination coordinates. With this reading the products used by the
//! calibration chain hold literally:
//!
//! * `B_k = T(Tcp ← World)`, the inverse of the forward-kinematics TCP pose;
//! * `X = T(Camera ← Tcp)`;
//! * `A_k = T(Pattern ← Camera)`, the inverse of a pattern detection;
//! * `C = T(Lidar ← Camera)` and `Y = T(Lidar ← World) = C · X · B_f`.
//!
//! Robot controllers normally report `T(World ← Tcp)`; invert it before
//! handing it to the hand-eye solver.

mod dual_quat;
mod frame;
mod plane;
pub mod rotation;
mod screw;
mod transform;

pub use dual_quat::{to_dual_quaternion, DualQuaternion};
pub use frame::FrameId;
pub use plane::{plane_from_pattern_pose, Plane, MIN_PLANE_DISTANCE};
pub use screw::{screw_decompose, ScrewParameters, MIN_SCREW_ANGLE};
pub use transform::{compose, invert, RigidTransform};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("FrameMismatch: expected frame {expected}, found {found}")]
    FrameMismatch { expected: FrameId, found: FrameId },
    #[error("DegenerateMotion: rotation angle below {MIN_SCREW_ANGLE} rad, screw axis undefined")]
    DegenerateMotion,
    #[error("DegeneratePlane: plane vector is zero or plane passes through the origin")]
    DegeneratePlane,
    #[error("InvalidRotation: quaternion is zero or not finite")]
    InvalidRotation,
    #[error("NotRigid: matrix is not an element of SE(3)")]
    NotRigid,
}
