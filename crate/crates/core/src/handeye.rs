//! Eye-in-hand calibration `A_ij · X = X · B_ij`.
//!
//! Samples pair a pattern detection `T(Camera ← Pattern)` with the inverse
//! TCP pose `T(Tcp ← World)`. With `A_k` the inverse detection, the product
//! `A_k · X · B_k` is the constant `T(Pattern ← World)`, so for any two samples
//! `A_ij = A_j⁻¹ A_i` and `B_ij = B_j B_i⁻¹` satisfy `A_ij X = X B_ij`.
//!
//! The solver stacks the dual-quaternion screw constraints of every motion
//! pair, takes the two-dimensional null space and picks the unique unit dual
//! quaternion inside it; a damped least-squares pass then refines `X` on a
//! rotation-log plus translation residual.

use nalgebra::{DMatrix, Matrix3, Quaternion, Vector3};

use crate::geometry::{rotation, DualQuaternion, FrameId, GeometryError, RigidTransform};
use crate::lsq::{self, DampedOptions};
use crate::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct HandEyeSample<T: Real> {
    /// `T(Camera ← Pattern)` as reported by the pattern detector.
    pub detection: RigidTransform<T>,
    /// `T(Tcp ← World)`, the inverse of the forward-kinematics pose.
    pub tcp_pose_inv: RigidTransform<T>,
    pub index: usize,
}

impl<T: Real> HandEyeSample<T> {
    pub fn new(
        detection: RigidTransform<T>,
        tcp_pose_inv: RigidTransform<T>,
        index: usize,
    ) -> Result<Self, GeometryError> {
        detection.expect_frames(&FrameId::Camera, &FrameId::Pattern)?;
        tcp_pose_inv.expect_frames(&FrameId::Tcp, &FrameId::World)?;
        Ok(Self {
            detection,
            tcp_pose_inv,
            index,
        })
    }

    /// `A_k = T(Pattern ← Camera)`.
    pub fn a(&self) -> RigidTransform<T> {
        self.detection.inverse()
    }
}

/// Relative motions between two samples.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionPair<T: Real> {
    /// `A_ij = A_j⁻¹ · A_i`, a camera motion.
    pub a: RigidTransform<T>,
    /// `B_ij = B_j · B_i⁻¹`, a TCP motion.
    pub b: RigidTransform<T>,
    pub source_indices: (usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairStrategy {
    /// Every `(i, j)` with `i < j`.
    All,
    /// `(k, k+1)` in sample order.
    Consecutive,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairOptions<T: Real> {
    pub strategy: PairStrategy,
    /// Pairs rotating less than this in either motion are dropped.
    pub min_rotation: T,
    /// Pairs whose two rotation angles differ by more are dropped.
    pub max_angle_mismatch: T,
    /// Cap on the number of pairs kept; the largest motions win.
    pub max_pairs: usize,
}

impl<T: Real> Default for PairOptions<T> {
    fn default() -> Self {
        Self {
            strategy: PairStrategy::All,
            min_rotation: T::deg(1.0),
            max_angle_mismatch: T::deg(2.0),
            max_pairs: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineOptions<T: Real> {
    pub max_iters: usize,
    /// Weight of the rotation residual (radians) against translation (meters).
    pub rotation_weight: T,
    pub initial_damping: T,
    pub step_tolerance: T,
}

impl<T: Real> Default for RefineOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 100,
            rotation_weight: T::one(),
            initial_damping: T::lit(1e-3),
            step_tolerance: T::lit(1e-12),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandEyeOptions<T: Real> {
    pub pairs: PairOptions<T>,
    /// Minimum angle between two motion rotation axes for the set to be solvable.
    pub min_axis_angle: T,
    pub refine: RefineOptions<T>,
}

impl<T: Real> Default for HandEyeOptions<T> {
    fn default() -> Self {
        Self {
            pairs: PairOptions::default(),
            min_axis_angle: T::deg(5.0),
            refine: RefineOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HandEyeResult<T: Real> {
    /// `T(Camera ← Tcp)`.
    pub x: RigidTransform<T>,
    /// RMS of the rotation-log residual over all pairs (radians).
    pub rotation_rms: T,
    /// RMS of the translation residual over all pairs (meters).
    pub translation_rms: T,
    pub pairs_used: usize,
    pub refined: bool,
    pub initial_cost: T,
    pub cost: T,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum HandEyeError<T: Real> {
    #[error("NotEnoughSamples: need at least 3 samples, got {found}")]
    NotEnoughSamples { found: usize },
    #[error("NoValidPairs: every motion pair was degenerate or inconsistent")]
    NoValidPairs,
    #[error("DegenerateMotionSet: motion rotation axes are (nearly) parallel")]
    DegenerateMotionSet,
    #[error("NumericalFailure: {0}")]
    NumericalFailure(String),
    #[error("DidNotConverge: iteration limit reached while the cost was still decreasing")]
    DidNotConverge(Box<HandEyeResult<T>>),
    #[error("InvalidSample: {0}")]
    InvalidSample(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn motion_pair<T: Real>(si: &HandEyeSample<T>, sj: &HandEyeSample<T>) -> MotionPair<T> {
    let ai = si.a();
    let aj_inv = &sj.detection;
    let a = aj_inv.compose_unchecked(&ai, FrameId::Camera, FrameId::Camera);
    let bi_inv = si.tcp_pose_inv.inverse();
    let b = sj
        .tcp_pose_inv
        .compose_unchecked(&bi_inv, FrameId::Tcp, FrameId::Tcp);
    MotionPair {
        a,
        b,
        source_indices: (si.index, sj.index),
    }
}

/// Builds the motion pairs and drops degenerate or inconsistent ones.
pub fn make_motion_pairs<T: Real>(
    samples: &[HandEyeSample<T>],
    opts: &PairOptions<T>,
) -> Result<Vec<MotionPair<T>>, HandEyeError<T>> {
    if samples.len() < 3 {
        return Err(HandEyeError::NotEnoughSamples {
            found: samples.len(),
        });
    }
    for s in samples {
        s.detection
            .expect_frames(&FrameId::Camera, &FrameId::Pattern)?;
        s.tcp_pose_inv.expect_frames(&FrameId::Tcp, &FrameId::World)?;
    }
    let mut seen: Vec<usize> = samples.iter().map(|s| s.index).collect();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(HandEyeError::InvalidSample(
            "sample indices must be unique".into(),
        ));
    }

    let candidates: Vec<(usize, usize)> = match opts.strategy {
        PairStrategy::All => (0..samples.len())
            .flat_map(|i| ((i + 1)..samples.len()).map(move |j| (i, j)))
            .collect(),
        PairStrategy::Consecutive => (1..samples.len()).map(|j| (j - 1, j)).collect(),
    };

    let mut kept: Vec<(T, MotionPair<T>)> = Vec::new();
    for (i, j) in candidates {
        let pair = motion_pair(&samples[i], &samples[j]);
        let angle_a = pair.a.rotation_angle();
        let angle_b = pair.b.rotation_angle();
        if angle_a < opts.min_rotation || angle_b < opts.min_rotation {
            log::debug!("pair {:?} dropped: rotation too small", pair.source_indices);
            continue;
        }
        if (angle_a - angle_b).abs() > opts.max_angle_mismatch {
            log::debug!("pair {:?} dropped: screw angles disagree", pair.source_indices);
            continue;
        }
        kept.push((angle_b, pair));
    }
    if kept.is_empty() {
        return Err(HandEyeError::NoValidPairs);
    }
    if kept.len() > opts.max_pairs {
        // stable: equal angles keep their enumeration order
        kept.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(std::cmp::Ordering::Equal));
        kept.truncate(opts.max_pairs);
        kept.sort_by_key(|(_, p)| p.source_indices);
    }
    Ok(kept.into_iter().map(|(_, p)| p).collect())
}

fn skew<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    Matrix3::new(
        T::zero(),
        -v.z,
        v.y,
        v.z,
        T::zero(),
        -v.x,
        -v.y,
        v.x,
        T::zero(),
    )
}

/// Largest angle between the rotation axes of any two camera motions.
pub fn max_axis_spread<T: Real>(pairs: &[MotionPair<T>]) -> T {
    let axes: Vec<Vector3<T>> = pairs.iter().map(|p| p.a.rotation_vector()).collect();
    let mut best = T::zero();
    for i in 0..axes.len() {
        for j in (i + 1)..axes.len() {
            best = best.max(rotation::line_angle(&axes[i], &axes[j]));
        }
    }
    best
}

/// Closed-form dual-quaternion solution of `A X = X B`.
pub fn solve_dq<T: Real>(
    pairs: &[MotionPair<T>],
    min_axis_angle: T,
) -> Result<RigidTransform<T>, HandEyeError<T>> {
    if pairs.len() < 2 || max_axis_spread(pairs) <= min_axis_angle {
        return Err(HandEyeError::DegenerateMotionSet);
    }
    let mut m = DMatrix::<T>::zeros(6 * pairs.len(), 8);
    for (k, p) in pairs.iter().enumerate() {
        let da = DualQuaternion::from_transform(&p.a);
        let mut db = DualQuaternion::from_transform(&p.b);
        if da.real.w * db.real.w < T::zero() {
            db = -db;
        }
        let a = da.real.imag();
        let b = db.real.imag();
        let ad = da.dual.imag();
        let bd = db.dual.imag();
        let r = 6 * k;
        m.fixed_view_mut::<3, 1>(r, 0).copy_from(&(a - b));
        m.fixed_view_mut::<3, 3>(r, 1).copy_from(&skew(&(a + b)));
        m.fixed_view_mut::<3, 1>(r + 3, 0).copy_from(&(ad - bd));
        m.fixed_view_mut::<3, 3>(r + 3, 1).copy_from(&skew(&(ad + bd)));
        m.fixed_view_mut::<3, 1>(r + 3, 4).copy_from(&(a - b));
        m.fixed_view_mut::<3, 3>(r + 3, 5).copy_from(&skew(&(a + b)));
    }

    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| HandEyeError::NumericalFailure("SVD did not produce V".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[i]
            .partial_cmp(&svd.singular_values[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let sigma_max = svd.singular_values[order[order.len() - 1]];
    if svd.singular_values[order[2]] <= T::lit(1e-10) * sigma_max {
        return Err(HandEyeError::DegenerateMotionSet);
    }
    let v1: Vec<T> = v_t.row(order[0]).iter().copied().collect();
    let v2: Vec<T> = v_t.row(order[1]).iter().copied().collect();
    let dot = |x: &[T], y: &[T]| x.iter().zip(y).fold(T::zero(), |acc, (&p, &q)| acc + p * q);
    let (u1, w1) = v1.split_at(4);
    let (u2, w2) = v2.split_at(4);

    // x = λ1 v1 + λ2 v2 with q·q' = 0 (homogeneous quadratic) and ‖q‖ = 1.
    let qa = dot(u1, w1);
    let qb = dot(u1, w2) + dot(u2, w1);
    let qc = dot(u2, w2);
    let directions = homogeneous_roots(qa, qb, qc)
        .ok_or_else(|| HandEyeError::NumericalFailure("no real root for the unit constraint".into()))?;
    let (uu11, uu12, uu22) = (dot(u1, u1), dot(u1, u2), dot(u2, u2));
    let (l1, l2, val) = directions
        .iter()
        .map(|&(l1, l2)| (l1, l2, l1 * l1 * uu11 + T::lit(2.0) * l1 * l2 * uu12 + l2 * l2 * uu22))
        .fold(None, |best: Option<(T, T, T)>, cand| match best {
            Some(b) if b.2 >= cand.2 => Some(b),
            _ => Some(cand),
        })
        .expect("at least one direction");
    if !(val > T::zero()) {
        return Err(HandEyeError::NumericalFailure(
            "degenerate rotation part in null space".into(),
        ));
    }
    let s = T::one() / val.sqrt();
    let comp: Vec<T> = v1
        .iter()
        .zip(&v2)
        .map(|(&a, &b)| (l1 * a + l2 * b) * s)
        .collect();
    let dq = DualQuaternion::new(
        Quaternion::new(comp[0], comp[1], comp[2], comp[3]),
        Quaternion::new(comp[4], comp[5], comp[6], comp[7]),
    );
    Ok(dq.to_transform(pairs[0].a.dst().clone(), pairs[0].b.dst().clone()))
}

/// Real directions `(λ1, λ2)` solving `a λ1² + b λ1 λ2 + c λ2² = 0`.
fn homogeneous_roots<T: Real>(a: T, b: T, c: T) -> Option<Vec<(T, T)>> {
    let scale = b * b + (a * c).abs() * T::lit(4.0);
    let mut disc = b * b - T::lit(4.0) * a * c;
    if disc < T::zero() {
        if disc < -T::lit(1e-10) * scale {
            return None;
        }
        disc = T::zero();
    }
    let sq = disc.sqrt();
    let (lead, trail, swap) = if a.abs() >= c.abs() { (a, c, false) } else { (c, a, true) };
    if lead == T::zero() {
        // all coefficients vanish except possibly b: λ1 = 0 or λ2 = 0
        return Some(vec![(T::one(), T::zero()), (T::zero(), T::one())]);
    }
    let sign = if b >= T::zero() { T::one() } else { -T::one() };
    let q = -(b + sign * sq) * T::lit(0.5);
    let mut roots = vec![q / lead];
    if q != T::zero() {
        roots.push(trail / q);
    }
    Some(
        roots
            .into_iter()
            .map(|r| {
                let (l1, l2) = if swap { (T::one(), r) } else { (r, T::one()) };
                let n = (l1 * l1 + l2 * l2).sqrt();
                (l1 / n, l2 / n)
            })
            .collect(),
    )
}

fn pair_residual<T: Real>(x: &RigidTransform<T>, p: &MotionPair<T>) -> (Vector3<T>, Vector3<T>) {
    let (qa, ta) = (p.a.rotation(), p.a.translation());
    let (qb, tb) = (p.b.rotation(), p.b.translation());
    let (qx, tx) = (x.rotation(), x.translation());
    let q_ax = qa * qx;
    let t_ax = qa * tx + ta;
    let q_xb = qx * qb;
    let t_xb = qx * tb + tx;
    (rotation::log(&(q_ax * q_xb.inverse())), t_ax - t_xb)
}

fn residuals_into<T: Real>(x: &RigidTransform<T>, pairs: &[MotionPair<T>], weight: T, out: &mut Vec<T>) {
    for p in pairs {
        let (r, t) = pair_residual(x, p);
        out.extend([r.x * weight, r.y * weight, r.z * weight, t.x, t.y, t.z]);
    }
}

/// Sum of squared refinement residuals at `x`.
pub fn handeye_cost<T: Real>(x: &RigidTransform<T>, pairs: &[MotionPair<T>], rotation_weight: T) -> T {
    let mut r = Vec::with_capacity(6 * pairs.len());
    residuals_into(x, pairs, rotation_weight, &mut r);
    r.iter().fold(T::zero(), |acc, &v| acc + v * v)
}

/// `‖matrix(A·X) − matrix(X·B)‖_F` for one pair.
pub fn pair_consistency<T: Real>(x: &RigidTransform<T>, p: &MotionPair<T>) -> T {
    let ax = p.a.compose_unchecked(x, FrameId::Camera, FrameId::Tcp);
    let xb = x.compose_unchecked(&p.b, FrameId::Camera, FrameId::Tcp);
    (ax.to_matrix() - xb.to_matrix()).norm()
}

/// RMS rotation (radians) and translation (meters) residuals over `pairs`.
pub fn residual_rms<T: Real>(x: &RigidTransform<T>, pairs: &[MotionPair<T>]) -> (T, T) {
    let (mut sr, mut st) = (T::zero(), T::zero());
    for p in pairs {
        let (r, t) = pair_residual(x, p);
        sr += r.norm_squared();
        st += t.norm_squared();
    }
    let n = T::from_count(pairs.len().max(1));
    ((sr / n).sqrt(), (st / n).sqrt())
}

pub fn refine<T: Real>(
    x0: &RigidTransform<T>,
    pairs: &[MotionPair<T>],
    opts: &RefineOptions<T>,
) -> Result<HandEyeResult<T>, HandEyeError<T>> {
    x0.expect_frames(&FrameId::Camera, &FrameId::Tcp)?;
    if pairs.is_empty() {
        return Err(HandEyeError::NoValidPairs);
    }
    let weight = opts.rotation_weight;
    let out = lsq::minimize(
        x0,
        |x, r| residuals_into(x, pairs, weight, r),
        &DampedOptions {
            max_iters: opts.max_iters,
            initial_damping: opts.initial_damping,
            step_tolerance: opts.step_tolerance,
        },
    );
    let (rotation_rms, translation_rms) = residual_rms(&out.pose, pairs);
    let result = HandEyeResult {
        x: out.pose,
        rotation_rms,
        translation_rms,
        pairs_used: pairs.len(),
        refined: true,
        initial_cost: out.initial_cost,
        cost: out.cost,
        iterations: out.iterations,
    };
    if out.converged {
        Ok(result)
    } else {
        Err(HandEyeError::DidNotConverge(Box::new(result)))
    }
}

/// Pairs, closed-form initialization and refinement in one call.
pub fn calibrate_handeye<T: Real>(
    samples: &[HandEyeSample<T>],
    opts: &HandEyeOptions<T>,
) -> Result<HandEyeResult<T>, HandEyeError<T>> {
    let pairs = make_motion_pairs(samples, &opts.pairs)?;
    let x0 = solve_dq(&pairs, opts.min_axis_angle)?;
    refine(&x0, &pairs, &opts.refine)
}
