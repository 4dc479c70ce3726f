use nalgebra::{DMatrix, DVector, Matrix3, Matrix3x2, Point3, Rotation3, UnitQuaternion, Vector3};

use super::{LidarCamError, ScanSegment};
use crate::geometry::{rotation, FrameId, Plane, RigidTransform};
use crate::lsq::{self, DampedOptions};
use crate::Real;

/// Plate plane seen by the camera paired with the plate points seen by the LIDAR.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneCorrespondence<T: Real> {
    /// `N_l` in camera coordinates.
    pub plane: Plane<T>,
    pub segment: ScanSegment<T>,
}

impl<T: Real> PlaneCorrespondence<T> {
    pub fn new(plane: Plane<T>, segment: ScanSegment<T>) -> Self {
        Self { plane, segment }
    }

    /// One algebraic residual `N·(C·p̂) − ‖N‖²` per segment point, where
    /// `camera_from_lidar` is `T(Camera ← Lidar)`.
    pub fn algebraic_residuals(&self, camera_from_lidar: &RigidTransform<T>) -> Vec<T> {
        self.segment
            .points
            .iter()
            .map(|p| {
                let x = camera_from_lidar.transform_point(&Point3::new(p.x, p.y, T::zero()));
                self.plane.algebraic_residual(&x)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LidarCamResult<T: Real> {
    /// `T(Lidar ← Camera)`.
    pub c: RigidTransform<T>,
    /// RMS point-to-plane distance in meters.
    pub plane_rms: T,
    pub correspondences_used: usize,
    /// Condition number of the refinement Jacobian at the solution.
    pub condition_hint: T,
    pub initial_cost: T,
    pub cost: T,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LidarCamOptions<T: Real> {
    /// Normals closer than this count as the same direction.
    pub min_normal_angle: T,
    pub refine: DampedOptions<T>,
}

impl<T: Real> Default for LidarCamOptions<T> {
    fn default() -> Self {
        Self {
            min_normal_angle: T::deg(5.0),
            refine: DampedOptions::default(),
        }
    }
}

/// Smallest/largest singular value of the unit-normal stack below which the
/// normals are treated as coplanar.
const COPLANAR_TOL: f64 = 1e-6;
/// Relative singular-value floor of the linear design matrix.
const RANK_TOL: f64 = 1e-10;

/// Largest angle between any two plate normals.
pub fn normal_spread<T: Real>(corrs: &[PlaneCorrespondence<T>]) -> T {
    let normals: Vec<Vector3<T>> = corrs.iter().map(|c| c.plane.normal()).collect();
    let mut best = T::zero();
    for i in 0..normals.len() {
        for j in (i + 1)..normals.len() {
            let (a, b) = (&normals[i], &normals[j]);
            best = best.max(a.cross(b).norm().atan2(a.dot(b)));
        }
    }
    best
}

fn check_geometry<T: Real>(corrs: &[PlaneCorrespondence<T>], min_angle: T) -> Result<(), LidarCamError<T>> {
    let rows: usize = corrs.iter().map(|c| c.segment.points.len()).sum();
    if corrs.len() < 3 || rows < 9 {
        return Err(LidarCamError::DegenerateGeometry);
    }
    let normals: Vec<Vector3<T>> = corrs.iter().map(|c| c.plane.normal()).collect();
    let mut distinct: Vec<Vector3<T>> = Vec::new();
    for n in &normals {
        if distinct.iter().all(|d| rotation::line_angle(d, n) > min_angle) {
            distinct.push(*n);
        }
    }
    if distinct.len() < 3 {
        return Err(LidarCamError::DegenerateGeometry);
    }
    let stack = DMatrix::from_fn(normals.len(), 3, |r, c| normals[r][c]);
    let sv = stack.singular_values();
    if sv.min() < T::lit(COPLANAR_TOL) * sv.max() {
        return Err(LidarCamError::DegenerateGeometry);
    }
    Ok(())
}

fn plane_residuals_into<T: Real>(
    camera_from_lidar: &RigidTransform<T>,
    corrs: &[PlaneCorrespondence<T>],
    out: &mut Vec<T>,
) {
    let r = camera_from_lidar.rotation_matrix();
    let t = camera_from_lidar.translation();
    for c in corrs {
        let n = c.plane.normal();
        let d = c.plane.distance();
        // n̂ᵀ(R p + t) − d with p = (x, y, 0)
        let nr = r.transpose() * n;
        let nt = n.dot(t) - d;
        out.extend(c.segment.points.iter().map(|p| nr.x * p.x + nr.y * p.y + nt));
    }
}

/// Point-to-plane residuals (meters) for `T(Lidar ← Camera)`.
pub fn plane_residuals<T: Real>(c: &RigidTransform<T>, corrs: &[PlaneCorrespondence<T>]) -> Vec<T> {
    let mut out = Vec::new();
    plane_residuals_into(&c.inverse(), corrs, &mut out);
    out
}

fn translation_given_rotation<T: Real>(
    r: &Matrix3<T>,
    corrs: &[PlaneCorrespondence<T>],
) -> Result<Vector3<T>, LidarCamError<T>> {
    let mut h = Matrix3::zeros();
    let mut g = Vector3::zeros();
    for c in corrs {
        let n = c.plane.normal();
        let d = c.plane.distance();
        for p in &c.segment.points {
            let rp = r * Vector3::new(p.x, p.y, T::zero());
            h += n * n.transpose();
            g += n * (d - n.dot(&rp));
        }
    }
    h.cholesky()
        .map(|ch| ch.solve(&g))
        .ok_or(LidarCamError::DegenerateGeometry)
}

fn camera_from_lidar<T: Real>(r: &Matrix3<T>, t: Vector3<T>) -> RigidTransform<T> {
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r));
    RigidTransform::new(q, t, FrameId::Camera, FrameId::Lidar)
}

/// The 24 rotations of the cube.
fn cube_rotations<T: Real>() -> Vec<Matrix3<T>> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = Vec::with_capacity(24);
    for p in perms {
        for signs in 0..8u8 {
            let mut m = Matrix3::zeros();
            for (row, &col) in p.iter().enumerate() {
                m[(row, col)] = if signs & (1 << row) == 0 { T::one() } else { -T::one() };
            }
            if m.determinant() > T::zero() {
                out.push(m);
            }
        }
    }
    out
}

/// Global search for the rank-deficient case (fewer than five plate
/// positions): every start rotation is refined with `t` re-solved linearly.
/// Among the lowest-cost minima the one with the smallest translation wins,
/// which encodes that the two sensors are mounted close to each other.
fn multistart<T: Real>(
    corrs: &[PlaneCorrespondence<T>],
    opts: &DampedOptions<T>,
) -> Result<RigidTransform<T>, LidarCamError<T>> {
    let offset = rotation::exp(&Vector3::new(T::lit(0.31), T::lit(-0.47), T::lit(0.53)))
        .to_rotation_matrix()
        .into_inner();
    let mut starts = cube_rotations::<T>();
    let shifted: Vec<Matrix3<T>> = starts.iter().map(|r| offset * r).collect();
    starts.extend(shifted);

    let mut minima: Vec<(T, RigidTransform<T>)> = Vec::with_capacity(starts.len());
    for r in &starts {
        let t = translation_given_rotation(r, corrs)?;
        let out = lsq::minimize(
            &camera_from_lidar(r, t),
            |x, res| plane_residuals_into(x, corrs, res),
            opts,
        );
        minima.push((out.cost, out.pose));
    }
    let rows = T::from_count(corrs.iter().map(|c| c.segment.points.len()).sum());
    let best = minima
        .iter()
        .map(|m| m.0)
        .fold(T::max_value().unwrap_or_else(|| T::lit(f64::MAX)), |a, b| a.min(b));
    let band = best * T::lit(1.0 + 1e-6) + rows * T::lit(1e-20);
    minima
        .into_iter()
        .filter(|m| m.0 <= band)
        .min_by(|a, b| {
            a.1.translation()
                .norm()
                .partial_cmp(&b.1.translation().norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|m| m.1)
        .ok_or(LidarCamError::DegenerateGeometry)
}

/// Initial `T(Lidar ← Camera)` from the stacked point-on-plane equations.
///
/// Segment points have `z = 0`, so each row `N·(R p + t) = ‖N‖²` only involves
/// the first two rotation columns and `t`: nine unknowns. When the stack has
/// full rank the least-squares solution is projected onto the nearest
/// orthonormal pair and `t` is re-solved for the projected rotation. Each
/// plate contributes only two independent rows (its points are collinear),
/// so fewer than five positions leave the system rank-deficient; that case
/// falls back to a multi-start nonlinear search over the rotation.
pub fn solve_linear<T: Real>(
    corrs: &[PlaneCorrespondence<T>],
    opts: &LidarCamOptions<T>,
) -> Result<RigidTransform<T>, LidarCamError<T>> {
    check_geometry(corrs, opts.min_normal_angle)?;
    let rows: usize = corrs.iter().map(|c| c.segment.points.len()).sum();
    let mut a = DMatrix::<T>::zeros(rows, 9);
    let mut b = DVector::<T>::zeros(rows);
    let mut k = 0;
    for c in corrs {
        let n = c.plane.normal();
        let d = c.plane.distance();
        for p in &c.segment.points {
            for i in 0..3 {
                a[(k, i)] = p.x * n[i];
                a[(k, 3 + i)] = p.y * n[i];
                a[(k, 6 + i)] = n[i];
            }
            b[k] = d;
            k += 1;
        }
    }
    let svd = a.svd(true, true);
    let (smin, smax) = (svd.singular_values.min(), svd.singular_values.max());
    if smin < T::lit(RANK_TOL) * smax {
        return Ok(multistart(corrs, &opts.refine)?.inverse());
    }
    let x = svd
        .solve(&b, T::eps())
        .map_err(|e| LidarCamError::NumericalFailure(e.to_string()))?;
    let m = Matrix3x2::new(x[0], x[3], x[1], x[4], x[2], x[5]);
    let polar = m.svd(true, true);
    let (u, v_t) = match (polar.u, polar.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(LidarCamError::NumericalFailure("polar decomposition failed".into())),
    };
    let q = u * v_t;
    let r1 = q.column(0).into_owned();
    let r2 = q.column(1).into_owned();
    let r = Matrix3::from_columns(&[r1, r2, r1.cross(&r2)]);
    let t = translation_given_rotation(&r, corrs)?;
    Ok(camera_from_lidar(&r, t).inverse())
}

/// Minimizes the point-to-plane distances over `T(Lidar ← Camera)`.
pub fn refine_nonlinear<T: Real>(
    c0: &RigidTransform<T>,
    corrs: &[PlaneCorrespondence<T>],
    opts: &LidarCamOptions<T>,
) -> Result<LidarCamResult<T>, LidarCamError<T>> {
    c0.expect_frames(&FrameId::Lidar, &FrameId::Camera)?;
    if corrs.is_empty() {
        return Err(LidarCamError::DegenerateGeometry);
    }
    let out = lsq::minimize(
        &c0.inverse(),
        |x, res| plane_residuals_into(x, corrs, res),
        &opts.refine,
    );
    let rows = corrs.iter().map(|c| c.segment.points.len()).sum::<usize>().max(1);
    let result = LidarCamResult {
        c: out.pose.inverse(),
        plane_rms: (out.cost / T::from_count(rows)).sqrt(),
        correspondences_used: corrs.len(),
        condition_hint: out.condition,
        initial_cost: out.initial_cost,
        cost: out.cost,
        iterations: out.iterations,
    };
    if out.converged {
        Ok(result)
    } else {
        Err(LidarCamError::DidNotConverge(Box::new(result)))
    }
}

pub fn calibrate_lidar_camera<T: Real>(
    corrs: &[PlaneCorrespondence<T>],
    opts: &LidarCamOptions<T>,
) -> Result<LidarCamResult<T>, LidarCamError<T>> {
    let c0 = solve_linear(corrs, opts)?;
    refine_nonlinear(&c0, corrs, opts)
}
