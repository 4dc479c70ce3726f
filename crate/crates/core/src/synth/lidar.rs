use nalgebra::{Matrix3, Point2, Rotation3, UnitQuaternion, Vector2, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{normal, perturb_pose, random_rotation, uniform, NoiseModel, SynthError};
use crate::geometry::{plane_from_pattern_pose, FrameId, Plane, RigidTransform};
use crate::lidarcam::{LidarScan, PlaneCorrespondence, ScanSegment};
use crate::Real;

/// A straight obstacle in the scan plane, LIDAR coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WallSegment<T: Real> {
    pub a: Point2<T>,
    pub b: Point2<T>,
}

impl<T: Real> WallSegment<T> {
    pub fn new(a: Point2<T>, b: Point2<T>) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> T {
        (self.b - self.a).norm()
    }

    /// Range along the ray with unit direction `dir` from the origin.
    fn hit(&self, dir: &Vector2<T>) -> Option<T> {
        let e = self.b - self.a;
        let den = dir.x * e.y - dir.y * e.x;
        if den.abs() < T::lit(1e-12) {
            return None;
        }
        let a = self.a.coords;
        let range = (a.x * e.y - a.y * e.x) / den;
        let s = (a.x * dir.y - a.y * dir.x) / den;
        (range > T::zero() && s >= T::zero() && s <= T::one()).then_some(range)
    }
}

/// Three 3 m walls around the sensor: one ahead at x = 3.2 m and one on each
/// side at y = ±2 m.
pub fn room_walls<T: Real>() -> Vec<WallSegment<T>> {
    let p = |x: f64, y: f64| Point2::new(T::lit(x), T::lit(y));
    vec![
        WallSegment::new(p(3.2, -1.5), p(3.2, 1.5)),
        WallSegment::new(p(0.2, 2.0), p(3.2, 2.0)),
        WallSegment::new(p(0.2, -2.0), p(3.2, -2.0)),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct LidarScenario<T: Real> {
    /// `T(Lidar ← Camera)`.
    pub c_gt: RigidTransform<T>,
    /// Plate poses `T(Camera ← Pattern)`; the plate is the pattern `z = 0` plane.
    pub plate_poses: Vec<RigidTransform<T>>,
    /// Plate extent along the pattern x-axis, meters.
    pub plate_width: T,
    /// Plate extent along the pattern y-axis, meters.
    pub plate_height: T,
    /// Points per plate when no rays are cast.
    pub samples_per_plate: usize,
    pub clutter: Vec<WallSegment<T>>,
    /// Casts rays at this bearing step instead of sampling the plate directly.
    /// Defaults to 0.25° when clutter is present.
    pub angular_resolution: Option<T>,
    pub noise: NoiseModel<T>,
    pub seed: u64,
}

impl<T: Real> LidarScenario<T> {
    pub fn new(c_gt: RigidTransform<T>, plate_poses: Vec<RigidTransform<T>>, seed: u64) -> Self {
        Self {
            c_gt,
            plate_poses,
            plate_width: T::lit(0.5),
            plate_height: T::lit(0.7),
            samples_per_plate: 30,
            clutter: Vec::new(),
            angular_resolution: None,
            noise: NoiseModel::zero(),
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LidarDataset<T: Real> {
    pub correspondences: Vec<PlaneCorrespondence<T>>,
    /// One scan per plate position.
    pub scans: Vec<LidarScan<T>>,
    /// Indices into each scan of the points that lie on the plate.
    pub plate_indices: Vec<Vec<usize>>,
}

const FIELD_OF_VIEW: f64 = std::f64::consts::PI;
const DEFAULT_RESOLUTION_DEG: f64 = 0.25;

/// End points of the plate/scan-plane intersection in LIDAR coordinates.
fn plate_chord<T: Real>(lidar_from_pattern: &RigidTransform<T>, width: T, height: T) -> Option<(Point2<T>, Point2<T>)> {
    let r = lidar_from_pattern.rotation_matrix();
    let t = lidar_from_pattern.translation();
    // z_lidar(x, y) = a x + b y + c on the pattern plane
    let (a, b, c) = (r[(2, 0)], r[(2, 1)], t.z);
    let g2 = a * a + b * b;
    if g2 < T::lit(1e-12) {
        return None;
    }
    let p0 = Vector2::new(a, b) * (-c / g2);
    let d = Vector2::new(b, -a) / g2.sqrt();
    let half = [width * T::lit(0.5), height * T::lit(0.5)];
    let (mut lo, mut hi) = (-T::lit(f64::MAX), T::lit(f64::MAX));
    for i in 0..2 {
        if d[i].abs() < T::lit(1e-15) {
            if p0[i].abs() > half[i] {
                return None;
            }
            continue;
        }
        let s0 = (-half[i] - p0[i]) / d[i];
        let s1 = (half[i] - p0[i]) / d[i];
        lo = lo.max(s0.min(s1));
        hi = hi.min(s0.max(s1));
    }
    if hi - lo < T::lit(1e-9) {
        return None;
    }
    let lift = |s: T| {
        let q = p0 + d * s;
        let x = lidar_from_pattern.transform_point(&nalgebra::Point3::new(q.x, q.y, T::zero()));
        Point2::new(x.x, x.y)
    };
    Some((lift(lo), lift(hi)))
}

fn with_range_noise<T: Real>(p: Point2<T>, dr: T) -> Point2<T> {
    let n = p.coords.norm();
    Point2::from(p.coords * ((n + dr) / n))
}

/// Forward model for the LIDAR-camera pair. Each plate position yields the
/// plane seen by the camera and one LIDAR scan.
pub fn generate_lidar<T: Real>(s: &LidarScenario<T>) -> Result<LidarDataset<T>, SynthError> {
    s.c_gt.expect_frames(&FrameId::Lidar, &FrameId::Camera)?;
    if !(s.plate_width > T::zero() && s.plate_height > T::zero()) {
        return Err(SynthError::InvalidScenario("plate dimensions must be positive".into()));
    }
    let mut chords = Vec::with_capacity(s.plate_poses.len());
    let mut hidden = Vec::new();
    for (l, pose) in s.plate_poses.iter().enumerate() {
        pose.expect_frames(&FrameId::Camera, &FrameId::Pattern)?;
        match plate_chord(&s.c_gt.compose(pose)?, s.plate_width, s.plate_height) {
            Some(c) => chords.push(c),
            None => hidden.push(l),
        }
    }
    if !hidden.is_empty() {
        return Err(SynthError::PlateNotVisible { indices: hidden });
    }

    let resolution = match (s.angular_resolution, s.clutter.is_empty()) {
        (Some(r), _) => Some(r),
        (None, false) => Some(T::deg(DEFAULT_RESOLUTION_DEG)),
        (None, true) => None,
    };
    if let Some(r) = resolution {
        if !(r > T::zero()) {
            return Err(SynthError::InvalidScenario("angular resolution must be positive".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut out = LidarDataset {
        correspondences: Vec::new(),
        scans: Vec::new(),
        plate_indices: Vec::new(),
    };
    for (l, pose) in s.plate_poses.iter().enumerate() {
        let seen = perturb_pose(pose, &s.noise, &mut rng);
        let plane = plane_from_pattern_pose(&seen)?;
        let (e0, e1) = chords[l];
        let (scan, on_plate) = match resolution {
            Some(step) => cast_rays(&WallSegment::new(e0, e1), &s.clutter, step, &s.noise, &mut rng),
            None => sample_chord(e0, e1, s.samples_per_plate, &s.noise, &mut rng),
        };
        if on_plate.len() < 2 {
            return Err(SynthError::PlateNotVisible { indices: vec![l] });
        }
        let points = on_plate.iter().map(|&i| scan.points[i]).collect();
        let mut segment = ScanSegment::from_points(points, l);
        segment.indices = on_plate.clone();
        out.correspondences.push(PlaneCorrespondence::new(plane, segment));
        out.scans.push(scan);
        out.plate_indices.push(on_plate);
    }
    Ok(out)
}

fn sample_chord<T: Real>(
    e0: Point2<T>,
    e1: Point2<T>,
    n: usize,
    noise: &NoiseModel<T>,
    rng: &mut ChaCha8Rng,
) -> (LidarScan<T>, Vec<usize>) {
    let mut u: Vec<T> = (0..n).map(|_| uniform(rng, 0.0, 1.0)).collect();
    u.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut points: Vec<Point2<T>> = u.iter().map(|&s| e0 + (e1 - e0) * s).collect();
    for p in points.iter_mut() {
        let dr = normal::<T, _>(rng) * noise.sigma_range;
        *p = with_range_noise(*p, dr);
    }
    let mut bearings: Vec<T> = points.iter().map(|p| p.y.atan2(p.x)).collect();
    if bearings.first() > bearings.last() {
        points.reverse();
        bearings.reverse();
    }
    let scan = LidarScan {
        points,
        bearings: Some(bearings),
    };
    (scan, (0..n).collect())
}

fn cast_rays<T: Real>(
    plate: &WallSegment<T>,
    walls: &[WallSegment<T>],
    step: T,
    noise: &NoiseModel<T>,
    rng: &mut ChaCha8Rng,
) -> (LidarScan<T>, Vec<usize>) {
    let fov = T::lit(FIELD_OF_VIEW);
    let rays = (fov / step).floor().to_usize().unwrap_or(0) + 1;
    let mut points = Vec::new();
    let mut bearings = Vec::new();
    let mut on_plate = Vec::new();
    for i in 0..rays {
        let bearing = -fov * T::lit(0.5) + step * T::from_count(i);
        let dir = Vector2::new(bearing.cos(), bearing.sin());
        let dr = normal::<T, _>(rng) * noise.sigma_range;
        let mut best: Option<(T, bool)> = plate.hit(&dir).map(|r| (r, true));
        for w in walls {
            if let Some(r) = w.hit(&dir) {
                if best.is_none_or(|(b, _)| r < b) {
                    best = Some((r, false));
                }
            }
        }
        if let Some((r, is_plate)) = best {
            if is_plate {
                on_plate.push(points.len());
            }
            points.push(Point2::from(dir * (r + dr)));
            bearings.push(bearing);
        }
    }
    let scan = LidarScan {
        points,
        bearings: Some(bearings),
    };
    (scan, on_plate)
}

/// Plate orientation `Lidar ← Pattern` facing a point at `bearing`, then
/// turned about the vertical by `yaw`, tilted by `tilt` and rolled by `roll`.
fn plate_rotation<T: Real>(bearing: T, yaw: T, tilt: T, roll: T) -> UnitQuaternion<T> {
    let x = Vector3::new(-bearing.sin(), bearing.cos(), T::zero());
    let y = Vector3::z();
    let base = Matrix3::from_columns(&[x, y, x.cross(&y)]);
    let base = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(base));
    base * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), yaw)
        * UnitQuaternion::from_axis_angle(&Vector3::x_axis(), tilt)
        * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), roll)
}

fn directed_spread<T: Real>(planes: &[Plane<T>]) -> T {
    let mut best = T::zero();
    for i in 0..planes.len() {
        for j in (i + 1)..planes.len() {
            let (a, b) = (planes[i].normal(), planes[j].normal());
            best = best.max(a.cross(&b).norm().atan2(a.dot(&b)));
        }
    }
    best
}

const MAX_PLATE_DRAWS: usize = 1_000;

/// `m` plate poses (`Camera ← Pattern`) crossing the scan plane 1 to 2.5 m in
/// front of the LIDAR within ±45° bearing, with plate normals spanning at
/// least `min_normal_spread`.
pub fn random_plate_poses<T: Real, R: Rng + ?Sized>(
    m: usize,
    c_gt: &RigidTransform<T>,
    min_normal_spread: T,
    rng: &mut R,
) -> Result<Vec<RigidTransform<T>>, SynthError> {
    c_gt.expect_frames(&FrameId::Lidar, &FrameId::Camera)?;
    let camera_from_lidar = c_gt.inverse();
    for _ in 0..MAX_PLATE_DRAWS {
        let mut poses = Vec::with_capacity(m);
        let mut planes = Vec::with_capacity(m);
        for _ in 0..m {
            let bearing: T = uniform(rng, -45f64.to_radians(), 45f64.to_radians());
            let range: T = uniform(rng, 1.0, 2.5);
            let z: T = uniform(rng, -0.1, 0.1);
            let q = plate_rotation(
                bearing,
                uniform(rng, -40f64.to_radians(), 40f64.to_radians()),
                uniform(rng, -40f64.to_radians(), 40f64.to_radians()),
                uniform(rng, -10f64.to_radians(), 10f64.to_radians()),
            );
            let t = Vector3::new(range * bearing.cos(), range * bearing.sin(), z);
            let lidar_from_pattern = RigidTransform::new(q, t, FrameId::Lidar, FrameId::Pattern);
            let pose = camera_from_lidar.compose(&lidar_from_pattern)?;
            match plane_from_pattern_pose(&pose) {
                Ok(p) => planes.push(p),
                Err(_) => break,
            }
            poses.push(pose);
        }
        if poses.len() == m && directed_spread(&planes) >= min_normal_spread {
            return Ok(poses);
        }
    }
    Err(SynthError::SamplingFailed {
        attempts: MAX_PLATE_DRAWS,
    })
}

/// Random sensor pair and `m` plate positions with normal spread of at least
/// `min_normal_spread`, 30 noise-scaled samples per plate.
pub fn random_lidar_scenario<T: Real>(
    m: usize,
    min_normal_spread: T,
    noise: NoiseModel<T>,
    seed: u64,
) -> Result<LidarScenario<T>, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5851_f42d_4c95_7f2d);
    let t = Vector3::new(normal::<T, _>(&mut rng), normal(&mut rng), normal(&mut rng)) * T::lit(0.2);
    let c_gt = RigidTransform::new(random_rotation(&mut rng), t, FrameId::Lidar, FrameId::Camera);
    let plates = random_plate_poses(m, &c_gt, min_normal_spread, &mut rng)?;
    let mut s = LidarScenario::new(c_gt, plates, seed);
    s.noise = noise;
    Ok(s)
}

/// Degenerate scenario: `m` plates at different places sharing one
/// orientation, hence parallel normals.
pub fn parallel_normal_scenario<T: Real>(m: usize, seed: u64) -> Result<LidarScenario<T>, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = Vector3::new(normal::<T, _>(&mut rng), normal(&mut rng), normal(&mut rng)) * T::lit(0.2);
    let c_gt = RigidTransform::new(random_rotation(&mut rng), t, FrameId::Lidar, FrameId::Camera);
    let q = plate_rotation(
        T::zero(),
        uniform(&mut rng, -0.5, 0.5),
        uniform(&mut rng, -0.5, 0.5),
        T::zero(),
    );
    let camera_from_lidar = c_gt.inverse();
    let mut plates = Vec::with_capacity(m);
    for _ in 0..m {
        let bearing: T = uniform(&mut rng, -0.5, 0.5);
        let range: T = uniform(&mut rng, 1.0, 2.5);
        let t = Vector3::new(range * bearing.cos(), range * bearing.sin(), uniform(&mut rng, -0.1, 0.1));
        let l = RigidTransform::new(q, t, FrameId::Lidar, FrameId::Pattern);
        plates.push(camera_from_lidar.compose(&l)?);
    }
    Ok(LidarScenario::new(c_gt, plates, seed))
}
