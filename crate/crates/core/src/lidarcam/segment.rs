//! Plate segment extraction from a planar scan.
//!
//! Ordered scans go through split-and-merge over scan order: split at range
//! gaps, recursively split at the point farthest from the chord, merge
//! collinear neighbours. Unordered point lists use sequential RANSAC line
//! extraction instead. Either way the result is a set of line segments that
//! are gated by fit quality and chord length.

use nalgebra::{Point2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LidarCamError;
use crate::Real;

/// A 2D scan in the LIDAR data frame (`z = 0` implicit).
#[derive(Clone, Debug, PartialEq)]
pub struct LidarScan<T: Real> {
    pub points: Vec<Point2<T>>,
    /// Per-point bearing in radians. When present it defines scan order.
    pub bearings: Option<Vec<T>>,
}

impl<T: Real> LidarScan<T> {
    pub fn new(points: Vec<Point2<T>>) -> Self {
        Self {
            points,
            bearings: None,
        }
    }

    pub fn with_bearings(points: Vec<Point2<T>>, bearings: Vec<T>) -> Result<Self, LidarCamError<T>> {
        if bearings.len() != points.len() {
            return Err(LidarCamError::InvalidScan(format!(
                "{} bearings for {} points",
                bearings.len(),
                points.len()
            )));
        }
        Ok(Self {
            points,
            bearings: Some(bearings),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.x.is_finite() && p.y.is_finite())
    }

    /// Point indices in scan order.
    fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.points.len()).collect();
        if let Some(b) = &self.bearings {
            idx.sort_by(|&i, &j| b[i].partial_cmp(&b[j]).unwrap_or(std::cmp::Ordering::Equal));
        }
        idx
    }
}

/// Total-least-squares line through a point set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line2<T: Real> {
    pub direction: Vector2<T>,
    pub point: Point2<T>,
}

impl<T: Real> Line2<T> {
    pub fn distance(&self, p: &Point2<T>) -> T {
        let d = p - self.point;
        (d.x * self.direction.y - d.y * self.direction.x).abs()
    }

    pub fn project(&self, p: &Point2<T>) -> T {
        (p - self.point).dot(&self.direction)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanSegment<T: Real> {
    pub points: Vec<Point2<T>>,
    /// Indices of `points` in the source scan (empty when built from bare points).
    pub indices: Vec<usize>,
    pub line: Line2<T>,
    pub inlier_rms: T,
    pub position_index: usize,
}

impl<T: Real> ScanSegment<T> {
    /// Wraps already-selected plate points without gating.
    pub fn from_points(points: Vec<Point2<T>>, position_index: usize) -> Self {
        let fit = fit_line(&points);
        Self {
            points,
            indices: Vec::new(),
            line: fit.line,
            inlier_rms: fit.rms,
            position_index,
        }
    }

    /// Extent of the points along the fitted line.
    pub fn chord_length(&self) -> T {
        chord(&self.line, &self.points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanOrder {
    /// Points (or bearings) follow the sweep; use split-and-merge.
    Sequential,
    /// No usable ordering; use RANSAC.
    Unordered,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentParams<T: Real> {
    pub min_points: usize,
    /// Maximum RMS distance of segment points from their line.
    pub inlier_tol: T,
    /// A piece is split when a point deviates more than this from its chord.
    pub split_tol: T,
    /// Consecutive points farther apart than this start a new run.
    pub max_gap: T,
    /// Relative chord-length gate around the expected plate width.
    pub length_tolerance: T,
    /// Runner-up within this relative inlier count makes the result ambiguous.
    pub ambiguity_ratio: T,
    pub order: ScanOrder,
    pub ransac_iterations: usize,
    pub seed: u64,
}

impl<T: Real> Default for SegmentParams<T> {
    fn default() -> Self {
        Self {
            min_points: 8,
            inlier_tol: T::lit(0.01),
            split_tol: T::lit(0.03),
            max_gap: T::lit(0.1),
            length_tolerance: T::lit(0.3),
            ambiguity_ratio: T::lit(0.05),
            order: ScanOrder::Sequential,
            ransac_iterations: 300,
            seed: 0,
        }
    }
}

pub(crate) struct Fit<T: Real> {
    pub line: Line2<T>,
    pub rms: T,
    pub max_dev: T,
}

pub(crate) fn fit_line<T: Real>(points: &[Point2<T>]) -> Fit<T> {
    let n = T::from_count(points.len().max(1));
    let c = points
        .iter()
        .fold(Vector2::zeros(), |acc, p| acc + p.coords)
        / n;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for p in points {
        let d = p.coords - c;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    let theta = (T::lit(2.0) * sxy).atan2(sxx - syy) * T::lit(0.5);
    let line = Line2 {
        direction: Vector2::new(theta.cos(), theta.sin()),
        point: Point2::from(c),
    };
    let (mut ss, mut max_dev) = (T::zero(), T::zero());
    for p in points {
        let d = line.distance(p);
        ss += d * d;
        max_dev = max_dev.max(d);
    }
    Fit {
        line,
        rms: (ss / n).sqrt(),
        max_dev,
    }
}

fn chord<T: Real>(line: &Line2<T>, points: &[Point2<T>]) -> T {
    let mut lo = T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    let mut hi = -lo;
    for p in points {
        let s = line.project(p);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if points.is_empty() {
        T::zero()
    } else {
        hi - lo
    }
}

/// Distance of `p` from the line through `a` and `b`.
fn chord_distance<T: Real>(a: &Point2<T>, b: &Point2<T>, p: &Point2<T>) -> T {
    let ab = b - a;
    let len = ab.norm();
    if len == T::zero() {
        return (p - a).norm();
    }
    let ap = p - a;
    (ab.x * ap.y - ab.y * ap.x).abs() / len
}

fn gather<T: Real>(scan: &LidarScan<T>, idx: &[usize]) -> Vec<Point2<T>> {
    idx.iter().map(|&i| scan.points[i]).collect()
}

fn split_recursive<T: Real>(scan: &LidarScan<T>, idx: &[usize], tol: T, out: &mut Vec<Vec<usize>>) {
    if idx.len() <= 2 {
        out.push(idx.to_vec());
        return;
    }
    let a = scan.points[idx[0]];
    let b = scan.points[idx[idx.len() - 1]];
    let (mut worst, mut at) = (T::zero(), 0);
    for (k, &i) in idx.iter().enumerate().skip(1).take(idx.len() - 2) {
        let d = chord_distance(&a, &b, &scan.points[i]);
        if d > worst {
            worst = d;
            at = k;
        }
    }
    if worst <= tol {
        out.push(idx.to_vec());
        return;
    }
    split_recursive(scan, &idx[..at], tol, out);
    split_recursive(scan, &idx[at..], tol, out);
}

/// Drops end points that sit off the line (typically a corner point).
fn trim_ends<T: Real>(scan: &LidarScan<T>, mut idx: Vec<usize>, tol: T) -> Vec<usize> {
    while idx.len() > 2 {
        let fit = fit_line(&gather(scan, &idx));
        let first = fit.line.distance(&scan.points[idx[0]]);
        let last = fit.line.distance(&scan.points[idx[idx.len() - 1]]);
        if first.max(last) <= tol {
            break;
        }
        if first >= last {
            idx.remove(0);
        } else {
            idx.pop();
        }
    }
    idx
}

fn sequential_pieces<T: Real>(scan: &LidarScan<T>, params: &SegmentParams<T>) -> Vec<Vec<usize>> {
    let order = scan.order();
    let mut runs: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match runs.last_mut() {
            Some(run)
                if (scan.points[i] - scan.points[*run.last().expect("nonempty")]).norm()
                    <= params.max_gap =>
            {
                run.push(i)
            }
            _ => runs.push(vec![i]),
        }
    }
    let mut pieces = Vec::new();
    for run in runs {
        let mut split = Vec::new();
        split_recursive(scan, &run, params.split_tol, &mut split);
        // merge neighbours that remain collinear
        let mut merged: Vec<Vec<usize>> = Vec::new();
        for piece in split {
            if let Some(prev) = merged.last_mut() {
                let mut joined = prev.clone();
                joined.extend_from_slice(&piece);
                if fit_line(&gather(scan, &joined)).max_dev <= params.split_tol {
                    *prev = joined;
                    continue;
                }
            }
            merged.push(piece);
        }
        pieces.extend(merged);
    }
    pieces
        .into_iter()
        .map(|p| trim_ends(scan, p, T::lit(2.0) * params.inlier_tol))
        .collect()
}

fn ransac_pieces<T: Real>(scan: &LidarScan<T>, params: &SegmentParams<T>) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut remaining: Vec<usize> = (0..scan.points.len()).collect();
    let band = params.split_tol;
    let mut pieces = Vec::new();
    while remaining.len() >= params.min_points.max(2) {
        let mut best: Vec<usize> = Vec::new();
        for _ in 0..params.ransac_iterations {
            let i = remaining[rng.random_range(0..remaining.len())];
            let j = remaining[rng.random_range(0..remaining.len())];
            if i == j {
                continue;
            }
            let (a, b) = (scan.points[i], scan.points[j]);
            if (b - a).norm() == T::zero() {
                continue;
            }
            let inliers: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&k| chord_distance(&a, &b, &scan.points[k]) <= band)
                .collect();
            if inliers.len() > best.len() {
                best = inliers;
            }
        }
        if best.len() < params.min_points {
            break;
        }
        let fit = fit_line(&gather(scan, &best));
        let mut inliers: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&k| fit.line.distance(&scan.points[k]) <= band)
            .collect();
        inliers.sort_by(|&a, &b| {
            fit.line
                .project(&scan.points[a])
                .partial_cmp(&fit.line.project(&scan.points[b]))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        // spatially contiguous clusters along the line
        let mut cluster: Vec<usize> = Vec::new();
        for &k in &inliers {
            if let Some(&last) = cluster.last() {
                if (scan.points[k] - scan.points[last]).norm() > params.max_gap {
                    pieces.push(std::mem::take(&mut cluster));
                }
            }
            cluster.push(k);
        }
        if !cluster.is_empty() {
            pieces.push(cluster);
        }
        remaining.retain(|k| !inliers.contains(k));
    }
    pieces
}

/// Finds the calibration plate in `scan`: the line segment with the most
/// points among those that fit a line within `inlier_tol` and whose chord
/// length is within the gate around `expected_length`.
pub fn extract_plate_segment<T: Real>(
    scan: &LidarScan<T>,
    expected_length: T,
    params: &SegmentParams<T>,
) -> Result<ScanSegment<T>, LidarCamError<T>> {
    if !(expected_length > T::zero()) {
        return Err(LidarCamError::InvalidScan(
            "expected plate length must be positive".into(),
        ));
    }
    if !scan.is_finite() {
        return Err(LidarCamError::InvalidScan("scan contains non-finite points".into()));
    }
    if scan.points.is_empty() {
        return Err(LidarCamError::NoSegmentFound);
    }
    let pieces = match params.order {
        ScanOrder::Sequential => sequential_pieces(scan, params),
        ScanOrder::Unordered => ransac_pieces(scan, params),
    };
    let lo = expected_length * (T::one() - params.length_tolerance);
    let hi = expected_length * (T::one() + params.length_tolerance);
    let mut candidates: Vec<ScanSegment<T>> = pieces
        .into_iter()
        .filter(|p| p.len() >= params.min_points)
        .filter_map(|mut idx| {
            if params.order == ScanOrder::Unordered {
                idx.sort_unstable();
            }
            let points = gather(scan, &idx);
            let fit = fit_line(&points);
            let len = chord(&fit.line, &points);
            (fit.rms <= params.inlier_tol && len >= lo && len <= hi).then_some(ScanSegment {
                points,
                indices: idx,
                line: fit.line,
                inlier_rms: fit.rms,
                position_index: 0,
            })
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.points
            .len()
            .cmp(&a.points.len())
            .then(a.inlier_rms.partial_cmp(&b.inlier_rms).unwrap_or(std::cmp::Ordering::Equal))
    });
    let mut it = candidates.into_iter();
    let best = it.next().ok_or(LidarCamError::NoSegmentFound)?;
    if let Some(second) = it.next() {
        let n1 = T::from_count(best.points.len());
        let n2 = T::from_count(second.points.len());
        if n1 - n2 <= params.ambiguity_ratio * n1 {
            return Err(LidarCamError::AmbiguousSegment {
                best: best.points.len(),
                runner_up: second.points.len(),
            });
        }
    }
    Ok(best)
}
