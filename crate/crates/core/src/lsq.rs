//! Damped Gauss-Newton (Levenberg-Marquardt) over a single SE(3) pose.
//!
//! Updates are 6-vectors `δ = (ω, v)` applied on the left:
//! `X ← T(ω, v) · X`. Jacobians are central differences, residual reductions
//! run in a fixed order so the result is bitwise reproducible.

use nalgebra::{Matrix6, SymmetricEigen, Vector3, Vector6};

use crate::geometry::RigidTransform;
use crate::Real;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DampedOptions<T: Real> {
    pub max_iters: usize,
    pub initial_damping: T,
    pub step_tolerance: T,
}

impl<T: Real> Default for DampedOptions<T> {
    fn default() -> Self {
        Self {
            max_iters: 100,
            initial_damping: T::lit(1e-3),
            step_tolerance: T::lit(1e-12),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome<T: Real> {
    pub pose: RigidTransform<T>,
    pub initial_cost: T,
    pub cost: T,
    pub iterations: usize,
    pub converged: bool,
    /// σ_max/σ_min of the Jacobian at the returned pose.
    pub condition: T,
}

/// Relative cost decrease above which hitting `max_iters` counts as failure.
const STALL_DECREASE: f64 = 1e-9;
const MAX_DAMPING: f64 = 1e16;

pub(crate) fn retract<T: Real>(x: &RigidTransform<T>, delta: &Vector6<T>) -> RigidTransform<T> {
    let w = Vector3::new(delta[0], delta[1], delta[2]);
    let v = Vector3::new(delta[3], delta[4], delta[5]);
    let step = RigidTransform::from_rotation_vector(w, v, x.dst().clone(), x.dst().clone());
    step.compose_unchecked(x, x.dst().clone(), x.src().clone())
}

fn sum_squares<T: Real>(r: &[T]) -> T {
    r.iter().fold(T::zero(), |acc, &v| acc + v * v)
}

struct Linearization<T: Real> {
    hessian: Matrix6<T>,
    gradient: Vector6<T>,
}

fn linearize<T, F>(x: &RigidTransform<T>, residuals: &F, r0: &[T]) -> Linearization<T>
where
    T: Real,
    F: Fn(&RigidTransform<T>, &mut Vec<T>),
{
    let h = T::eps().powf(T::lit(1.0 / 3.0));
    let m = r0.len();
    let mut cols: Vec<Vec<T>> = Vec::with_capacity(6);
    let mut plus = Vec::with_capacity(m);
    let mut minus = Vec::with_capacity(m);
    for k in 0..6 {
        let mut d = Vector6::zeros();
        d[k] = h;
        plus.clear();
        minus.clear();
        residuals(&retract(x, &d), &mut plus);
        residuals(&retract(x, &(-d)), &mut minus);
        let inv = T::one() / (h + h);
        cols.push(plus.iter().zip(&minus).map(|(&a, &b)| (a - b) * inv).collect());
    }
    let mut hessian = Matrix6::zeros();
    let mut gradient = Vector6::zeros();
    for i in 0..6 {
        gradient[i] = cols[i].iter().zip(r0).fold(T::zero(), |acc, (&j, &r)| acc + j * r);
        for k in i..6 {
            let v = cols[i]
                .iter()
                .zip(&cols[k])
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b);
            hessian[(i, k)] = v;
            hessian[(k, i)] = v;
        }
    }
    Linearization { hessian, gradient }
}

fn condition_of<T: Real>(hessian: &Matrix6<T>) -> T {
    let eig = SymmetricEigen::new(*hessian);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min().max(T::zero());
    if !(max > T::zero()) {
        return T::one() / T::eps();
    }
    let floor = max * T::eps() * T::eps();
    (max / min.max(floor)).sqrt()
}

pub(crate) fn minimize<T, F>(x0: &RigidTransform<T>, residuals: F, opts: &DampedOptions<T>) -> Outcome<T>
where
    T: Real,
    F: Fn(&RigidTransform<T>, &mut Vec<T>),
{
    let mut x = x0.clone();
    let mut r = Vec::new();
    residuals(&x, &mut r);
    let initial_cost = sum_squares(&r);
    let mut cost = initial_cost;
    let mut lambda = opts.initial_damping;
    let mut lin = linearize(&x, &residuals, &r);
    let mut iterations = 0;
    let mut last_decrease = T::zero();
    let mut converged = false;
    let mut trial = Vec::with_capacity(r.len());

    while iterations < opts.max_iters {
        if cost == T::zero() {
            converged = true;
            break;
        }
        let diag_max = (0..6).fold(T::zero(), |a, i| a.max(lin.hessian[(i, i)]));
        if !(diag_max > T::zero()) {
            converged = true;
            break;
        }
        iterations += 1;
        let mut damped = lin.hessian;
        for i in 0..6 {
            let d = lin.hessian[(i, i)].max(diag_max * T::lit(1e-12));
            damped[(i, i)] += lambda * d;
        }
        let Some(chol) = damped.cholesky() else {
            lambda *= T::lit(10.0);
            continue;
        };
        let delta = chol.solve(&(-lin.gradient));
        if delta.norm() < opts.step_tolerance {
            converged = true;
            break;
        }
        let candidate = retract(&x, &delta);
        trial.clear();
        residuals(&candidate, &mut trial);
        let new_cost = sum_squares(&trial);
        if new_cost < cost {
            last_decrease = (cost - new_cost) / cost;
            x = candidate;
            cost = new_cost;
            std::mem::swap(&mut r, &mut trial);
            lin = linearize(&x, &residuals, &r);
            lambda = (lambda / T::lit(10.0)).max(T::lit(1e-12));
        } else {
            lambda *= T::lit(10.0);
            if lambda > T::lit(MAX_DAMPING) {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        converged = last_decrease <= T::lit(STALL_DECREASE);
    }
    Outcome {
        condition: condition_of(&lin.hessian),
        pose: x,
        initial_cost,
        cost,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FrameId;
    use nalgebra::{Point3, UnitQuaternion};

    // Point-set alignment: residual = X·p − q for known correspondences.
    #[test]
    fn aligns_point_sets() {
        let truth = RigidTransform::new(
            UnitQuaternion::from_euler_angles(0.3, -0.2, 0.8),
            Vector3::new(0.4, -0.1, 0.25),
            FrameId::Camera,
            FrameId::Lidar,
        );
        let pts: Vec<Point3<f64>> = (0..8)
            .map(|i| {
                let f = i as f64;
                Point3::new(f.sin(), (1.3 * f).cos(), 0.1 * f)
            })
            .collect();
        let obs: Vec<Point3<f64>> = pts.iter().map(|p| truth.transform_point(p)).collect();
        let start = RigidTransform::identity(FrameId::Camera, FrameId::Lidar);
        let out = minimize(
            &start,
            |x, r: &mut Vec<f64>| {
                for (p, q) in pts.iter().zip(&obs) {
                    let d = x.transform_point(p) - q;
                    r.extend_from_slice(d.as_slice());
                }
            },
            &DampedOptions::default(),
        );
        assert!(out.converged);
        assert!(out.cost <= out.initial_cost);
        assert!((out.pose.to_matrix() - truth.to_matrix()).norm() < 1e-10);
    }
}
