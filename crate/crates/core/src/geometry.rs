//! Clamped B-spline trajectories.
//!
//! A trajectory is a spline of order `k` (degree `k - 1`) over 3D control
//! points. Basis functions follow the Cox-de Boor recursion with the `0/0 = 0`
//! convention, and the evaluation domain `[u_{k-1}, u_{n+1}]` is closed on the
//! right so that the final control point is reachable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

/// Default spline order (cubic).
pub const DEFAULT_ORDER: usize = 4;
/// Default number of samples used when a trajectory is discretized for costing.
pub const DEFAULT_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parameter {u} outside evaluation domain [{lo}, {hi}]")]
    OutOfDomain { u: f64, lo: f64, hi: f64 },
}

/// Nondecreasing sequence of spline parameters `u_0..u_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct KnotVector(Vec<f64>);

impl KnotVector {
    pub fn new(knots: Vec<f64>) -> Result<Self, GeometryError> {
        if knots.iter().any(|u| !u.is_finite()) {
            return Err(GeometryError::InvalidConfig("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(GeometryError::InvalidConfig("knots must be nondecreasing".into()));
        }
        Ok(Self(knots))
    }

    /// Clamped uniform knots on `[0, 1]` for `n_control` control points of the
    /// given order: `order` zeros, equally spaced interior knots, `order` ones.
    pub fn clamped_uniform(n_control: usize, order: usize) -> Result<Self, GeometryError> {
        if order < 2 || n_control < order {
            return Err(GeometryError::InvalidConfig(format!(
                "clamped knots need n_control >= order >= 2 (got n_control={n_control}, order={order})"
            )));
        }
        let segments = n_control - order + 1;
        let mut knots = Vec::with_capacity(n_control + order);
        knots.extend(std::iter::repeat_n(0.0, order));
        knots.extend((1..segments).map(|j| j as f64 / segments as f64));
        knots.extend(std::iter::repeat_n(1.0, order));
        Ok(Self(knots))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of control points implied by this vector for splines of `order`.
    fn n_control(&self, order: usize) -> Option<usize> {
        self.0.len().checked_sub(order).filter(|&n| n >= 1)
    }

    /// Evaluation domain `[u_{k-1}, u_{n+1}]` for splines of `order`.
    pub fn domain(&self, order: usize) -> Option<(f64, f64)> {
        let n_control = self.n_control(order)?;
        if order == 0 || n_control < order {
            return None;
        }
        Some((self.0[order - 1], self.0[n_control]))
    }
}

impl TryFrom<Vec<f64>> for KnotVector {
    type Error = GeometryError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<KnotVector> for Vec<f64> {
    fn from(k: KnotVector) -> Self {
        k.0
    }
}

/// Checks `u` against the domain of a spline of `order` over `knots` and
/// returns the domain bounds.
fn check_domain(knots: &[f64], order: usize, u: f64) -> Result<(f64, f64), GeometryError> {
    let n_control = knots.len().saturating_sub(order);
    if order == 0 || n_control < 1 {
        return Err(GeometryError::InvalidConfig("knot vector too short for order".into()));
    }
    let lo = knots[order - 1];
    let hi = knots[n_control];
    if !(lo..=hi).contains(&u) || !u.is_finite() {
        return Err(GeometryError::OutOfDomain { u, lo, hi });
    }
    Ok((lo, hi))
}

/// Cox-de Boor basis function `N_{i,k}(u)`.
///
/// Any `0/0` quotient in the recursion is taken as 0. At the final knot the
/// last nonempty half-open interval is extended to include its right end.
pub fn basis(i: usize, order: usize, u: f64, knots: &KnotVector) -> Result<f64, GeometryError> {
    let u_knots = knots.as_slice();
    if order == 0 || i + order >= u_knots.len() {
        return Err(GeometryError::InvalidConfig(format!(
            "basis index {i} invalid for order {order} and {} knots",
            u_knots.len()
        )));
    }
    check_domain(u_knots, order, u)?;
    Ok(cox_de_boor(i, order, u, u_knots))
}

fn cox_de_boor(i: usize, order: usize, u: f64, knots: &[f64]) -> f64 {
    if order == 1 {
        let (a, b) = (knots[i], knots[i + 1]);
        if a <= u && u < b {
            return 1.0;
        }
        let last = knots[knots.len() - 1];
        // closed right end: the last nonempty interval owns u_m
        if u == last && b == last && a < b {
            return 1.0;
        }
        return 0.0;
    }
    let mut value = 0.0;
    let left_den = knots[i + order - 1] - knots[i];
    if left_den > 0.0 {
        value += (u - knots[i]) / left_den * cox_de_boor(i, order - 1, u, knots);
    }
    let right_den = knots[i + order] - knots[i + 1];
    if right_den > 0.0 {
        value += (knots[i + order] - u) / right_den * cox_de_boor(i + 1, order - 1, u, knots);
    }
    value
}

/// Knot span `s` with `u_s <= u < u_{s+1}`, restricted to `order-1 <= s <= n`.
/// At the right end of the domain the last nonempty span is used.
fn find_span(knots: &[f64], order: usize, u: f64) -> usize {
    let n = knots.len() - order - 1;
    let hi = knots[n + 1];
    if u >= hi {
        let mut s = n;
        while s > order - 1 && knots[s] >= knots[s + 1] {
            s -= 1;
        }
        return s;
    }
    let s = knots.partition_point(|&t| t <= u) - 1;
    s.clamp(order - 1, n)
}

/// Nonzero basis values `N_{s-k+1..=s, k}(u)` by the triangular scheme.
fn nonzero_basis(knots: &[f64], order: usize, span: usize, u: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), order);
    let degree = order - 1;
    let mut left = [0.0; 16];
    let mut right = [0.0; 16];
    out[0] = 1.0;
    for j in 1..=degree {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let den = right[r + 1] + left[j - r];
            let temp = if den > 0.0 { out[r] / den } else { 0.0 };
            out[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out[j] = saved;
    }
}

fn eval_spline(order: usize, control: &[Vec3], knots: &[f64], u: f64) -> Vec3 {
    let span = find_span(knots, order, u);
    let mut weights = [0.0; 16];
    let weights = &mut weights[..order];
    nonzero_basis(knots, order, span, u, weights);
    let first = span + 1 - order;
    weights
        .iter()
        .zip(&control[first..=span])
        .fold(Vec3::zeros(), |acc, (w, p)| acc + p * *w)
}

/// Control points of the derivative spline (order `k-1` over `u_1..u_{m-1}`).
fn derivative_control(order: usize, control: &[Vec3], knots: &[f64]) -> Vec<Vec3> {
    let scale = (order - 1) as f64;
    control
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let den = knots[i + order] - knots[i + 1];
            if den > 0.0 {
                (w[1] - w[0]) * (scale / den)
            } else {
                Vec3::zeros()
            }
        })
        .collect()
}

/// Clamped B-spline curve of order `k` over 3D control points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineTrajectory {
    order: usize,
    control_points: Vec<Vec3>,
    knots: KnotVector,
}

impl BSplineTrajectory {
    pub fn new(order: usize, control_points: Vec<Vec3>, knots: KnotVector) -> Result<Self, GeometryError> {
        if order < 2 || order > 16 {
            return Err(GeometryError::InvalidConfig(format!("order must be in 2..=16, got {order}")));
        }
        if control_points.len() < order {
            return Err(GeometryError::InvalidConfig(format!(
                "{} control points is fewer than order {order}",
                control_points.len()
            )));
        }
        if knots.len() != control_points.len() + order {
            return Err(GeometryError::InvalidConfig(format!(
                "expected {} knots, got {}",
                control_points.len() + order,
                knots.len()
            )));
        }
        if control_points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::InvalidConfig("control points must be finite".into()));
        }
        match knots.domain(order) {
            Some((lo, hi)) if lo < hi => {}
            _ => return Err(GeometryError::InvalidConfig("empty evaluation domain".into())),
        }
        Ok(Self { order, control_points, knots })
    }

    /// Spline with clamped uniform knots on `[0, 1]`.
    pub fn clamped(order: usize, control_points: Vec<Vec3>) -> Result<Self, GeometryError> {
        let knots = KnotVector::clamped_uniform(control_points.len(), order)?;
        Self::new(order, control_points, knots)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn control_points(&self) -> &[Vec3] {
        &self.control_points
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn domain(&self) -> (f64, f64) {
        self.knots.domain(self.order).expect("validated at construction")
    }

    /// `C(u) = sum_i P_i N_{i,k}(u)`.
    pub fn evaluate(&self, u: f64) -> Result<Vec3, GeometryError> {
        check_domain(self.knots.as_slice(), self.order, u)?;
        Ok(eval_spline(self.order, &self.control_points, self.knots.as_slice(), u))
    }

    /// First derivative `C'(u)` from the order `k-1` spline of scaled
    /// control-point differences.
    pub fn velocity(&self, u: f64) -> Result<Vec3, GeometryError> {
        let knots = self.knots.as_slice();
        check_domain(knots, self.order, u)?;
        let q = derivative_control(self.order, &self.control_points, knots);
        Ok(eval_spline(self.order - 1, &q, &knots[1..knots.len() - 1], u))
    }

    pub fn sample(&self, n_samples: usize, with_velocity: bool) -> Result<SampledPath, GeometryError> {
        if n_samples < 2 {
            return Err(GeometryError::InvalidConfig(format!("need at least 2 samples, got {n_samples}")));
        }
        let params = sample_params(self.domain(), n_samples);
        let points = params.iter().map(|&u| self.evaluate(u)).collect::<Result<Vec<_>, _>>()?;
        let velocities = if with_velocity {
            Some(params.iter().map(|&u| self.velocity(u)).collect::<Result<Vec<_>, _>>()?)
        } else {
            None
        };
        Ok(SampledPath { params, points, velocities })
    }
}

fn sample_params((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let mut params: Vec<f64> = (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect();
    params[n - 1] = hi;
    params
}

/// A discretized trajectory: strictly increasing parameters with positions
/// and optionally first-derivative vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    params: Vec<f64>,
    points: Vec<Vec3>,
    velocities: Option<Vec<Vec3>>,
}

impl SampledPath {
    pub fn new(params: Vec<f64>, points: Vec<Vec3>, velocities: Option<Vec<Vec3>>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::InvalidConfig("a sampled path needs at least 2 samples".into()));
        }
        if params.len() != points.len() || velocities.as_ref().is_some_and(|v| v.len() != points.len()) {
            return Err(GeometryError::InvalidConfig("sample arrays differ in length".into()));
        }
        if params.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(GeometryError::InvalidConfig("sample parameters must be strictly increasing".into()));
        }
        Ok(Self { params, points, velocities })
    }

    /// Path through `points` at parameters spaced evenly on `[0, 1]`.
    pub fn from_points(points: Vec<Vec3>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::InvalidConfig("a sampled path needs at least 2 samples".into()));
        }
        let params = sample_params((0.0, 1.0), points.len());
        Self::new(params, points, None)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn velocities(&self) -> Option<&[Vec3]> {
        self.velocities.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Vec3 {
        self.points[0]
    }

    pub fn last(&self) -> Vec3 {
        self.points[self.points.len() - 1]
    }

    /// Chord-length approximation of the curve length.
    pub fn arc_length(&self) -> f64 {
        arc_length(&self.points)
    }

    /// Point at distance `s` along the polyline, clamped to the ends.
    pub fn point_at_distance(&self, s: f64) -> Vec3 {
        let mut remaining = s.max(0.0);
        for w in self.points.windows(2) {
            let seg = (w[1] - w[0]).norm();
            if remaining <= seg {
                if seg == 0.0 {
                    return w[0];
                }
                return w[0] + (w[1] - w[0]) * (remaining / seg);
            }
            remaining -= seg;
        }
        self.last()
    }
}

pub fn arc_length(points: &[Vec3]) -> f64 {
    points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Basis weights precomputed for a fixed knot vector and sample grid, so that
/// repeated sampling of splines that only differ in control points is a small
/// dense product.
#[derive(Debug, Clone)]
pub struct BasisTable {
    order: usize,
    n_control: usize,
    params: Vec<f64>,
    /// per sample: first control index and `order` weights
    position: Vec<(usize, Vec<f64>)>,
    /// per sample: first control index and `order` derivative weights
    velocity: Vec<(usize, Vec<f64>)>,
}

impl BasisTable {
    pub fn new(knots: &KnotVector, order: usize, n_samples: usize) -> Result<Self, GeometryError> {
        if n_samples < 2 {
            return Err(GeometryError::InvalidConfig(format!("need at least 2 samples, got {n_samples}")));
        }
        if !(2..=16).contains(&order) {
            return Err(GeometryError::InvalidConfig(format!("order must be in 2..=16, got {order}")));
        }
        let n_control = knots
            .n_control(order)
            .filter(|&n| n >= order)
            .ok_or_else(|| GeometryError::InvalidConfig("knot vector too short for order".into()))?;
        let domain = knots.domain(order).filter(|(lo, hi)| lo < hi);
        let domain = domain.ok_or_else(|| GeometryError::InvalidConfig("empty evaluation domain".into()))?;
        let u_knots = knots.as_slice();
        let d_knots = &u_knots[1..u_knots.len() - 1];
        let params = sample_params(domain, n_samples);
        let scale = (order - 1) as f64;

        let mut position = Vec::with_capacity(n_samples);
        let mut velocity = Vec::with_capacity(n_samples);
        for &u in &params {
            let span = find_span(u_knots, order, u);
            let mut w = vec![0.0; order];
            nonzero_basis(u_knots, order, span, u, &mut w);
            position.push((span + 1 - order, w));

            // derivative: sum_j b_j c_j (P_{j+1} - P_j)
            let d_order = order - 1;
            let d_span = find_span(d_knots, d_order, u);
            let mut b = vec![0.0; d_order];
            nonzero_basis(d_knots, d_order, d_span, u, &mut b);
            let q_first = d_span + 1 - d_order;
            let mut dw = vec![0.0; order];
            for (r, bj) in b.iter().enumerate() {
                let j = q_first + r;
                let den = u_knots[j + order] - u_knots[j + 1];
                if den > 0.0 {
                    let c = bj * scale / den;
                    dw[r + 1] += c;
                    dw[r] -= c;
                }
            }
            velocity.push((q_first, dw));
        }
        Ok(Self { order, n_control, params, position, velocity })
    }

    pub fn n_control(&self) -> usize {
        self.n_control
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn n_samples(&self) -> usize {
        self.params.len()
    }

    fn combine(rows: &[(usize, Vec<f64>)], control: &[Vec3]) -> Vec<Vec3> {
        rows.iter()
            .map(|(first, w)| {
                w.iter()
                    .zip(&control[*first..*first + w.len()])
                    .fold(Vec3::zeros(), |acc, (wi, p)| acc + p * *wi)
            })
            .collect()
    }

    /// Samples the spline with these control points at the table's grid.
    pub fn sample(&self, control: &[Vec3], with_velocity: bool) -> Result<SampledPath, GeometryError> {
        if control.len() != self.n_control {
            return Err(GeometryError::InvalidConfig(format!(
                "expected {} control points, got {}",
                self.n_control,
                control.len()
            )));
        }
        let points = Self::combine(&self.position, control);
        let velocities = with_velocity.then(|| Self::combine(&self.velocity, control));
        Ok(SampledPath { params: self.params.clone(), points, velocities })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn clamped_knots_bezier_case() {
        let k = KnotVector::clamped_uniform(4, 4).unwrap();
        assert_eq!(k.as_slice(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn clamped_knots_single_interior() {
        let k = KnotVector::clamped_uniform(5, 4).unwrap();
        assert_eq!(k.as_slice(), &[0.0, 0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn clamped_knots_reject_too_few_points() {
        assert!(matches!(KnotVector::clamped_uniform(3, 4), Err(GeometryError::InvalidConfig(_))));
    }

    #[test]
    fn order_one_basis_is_indicator() {
        let k = KnotVector::new(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(basis(1, 1, 1.5, &k).unwrap(), 1.0);
        assert_eq!(basis(0, 1, 1.5, &k).unwrap(), 0.0);
        assert_eq!(basis(2, 1, 1.5, &k).unwrap(), 0.0);
        // left end closed, right end open
        assert_eq!(basis(1, 1, 1.0, &k).unwrap(), 1.0);
        assert_eq!(basis(0, 1, 1.0, &k).unwrap(), 0.0);
    }

    #[test]
    fn linear_basis_matches_interpolation_weights() {
        let k = KnotVector::new(vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(basis(0, 2, 0.25, &k).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(basis(1, 2, 0.25, &k).unwrap(), 0.25, epsilon = 1e-15);
        // closed right end
        assert_eq!(basis(1, 2, 1.0, &k).unwrap(), 1.0);
    }

    #[test]
    fn basis_rejects_out_of_domain() {
        let k = KnotVector::clamped_uniform(5, 4).unwrap();
        assert!(matches!(basis(0, 4, 1.5, &k), Err(GeometryError::OutOfDomain { .. })));
        assert!(matches!(basis(0, 4, -0.1, &k), Err(GeometryError::OutOfDomain { .. })));
        assert!(matches!(basis(9, 4, 0.5, &k), Err(GeometryError::InvalidConfig(_))));
    }

    #[test]
    fn constant_control_polygon_evaluates_to_constant() {
        let q = v(1.5, -2.0, 3.25);
        let t = BSplineTrajectory::clamped(4, vec![q; 7]).unwrap();
        for j in 0..=20 {
            let p = t.evaluate(j as f64 / 20.0).unwrap();
            assert_abs_diff_eq!((p - q).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn clamped_endpoints_interpolate() {
        let pts = vec![v(0.0, 0.0, 0.0), v(1.0, 5.0, 2.0), v(3.0, -1.0, 4.0), v(6.0, 2.0, 1.0), v(7.0, 7.0, 7.0)];
        let t = BSplineTrajectory::clamped(4, pts.clone()).unwrap();
        assert_abs_diff_eq!((t.evaluate(0.0).unwrap() - pts[0]).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((t.evaluate(1.0).unwrap() - pts[4]).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_spline_midpoint() {
        let t = BSplineTrajectory::clamped(2, vec![v(0.0, 0.0, 0.0), v(2.0, 0.0, 0.0)]).unwrap();
        let (lo, hi) = t.domain();
        let p = t.evaluate(0.5 * (lo + hi)).unwrap();
        assert_abs_diff_eq!((p - v(1.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn evaluate_rejects_out_of_domain() {
        let t = BSplineTrajectory::clamped(2, vec![v(0.0, 0.0, 0.0), v(2.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(t.evaluate(1.0001), Err(GeometryError::OutOfDomain { .. })));
    }

    #[test]
    fn linear_spline_velocity_is_constant() {
        let t = BSplineTrajectory::clamped(2, vec![v(0.0, 0.0, 0.0), v(2.0, 0.0, 0.0)]).unwrap();
        let path = t.sample(11, true).unwrap();
        for vel in path.velocities().unwrap() {
            assert_abs_diff_eq!((vel - v(2.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn velocity_matches_finite_differences() {
        let pts = vec![v(0.0, 0.0, 0.0), v(1.0, 5.0, 2.0), v(3.0, -1.0, 4.0), v(6.0, 2.0, 1.0), v(7.0, 7.0, 7.0), v(9.0, 1.0, 0.0)];
        let t = BSplineTrajectory::clamped(4, pts).unwrap();
        let h = 1e-6;
        for &u in &[0.1, 0.3, 0.45, 0.7, 0.9] {
            let fd = (t.evaluate(u + h).unwrap() - t.evaluate(u - h).unwrap()) / (2.0 * h);
            let an = t.velocity(u).unwrap();
            assert!((fd - an).norm() < 1e-5 * (1.0 + an.norm()), "u={u}: fd={fd:?} an={an:?}");
        }
    }

    #[test]
    fn two_samples_are_the_endpoints() {
        let pts = vec![v(0.0, 0.0, 0.0), v(1.0, 5.0, 2.0), v(3.0, -1.0, 4.0), v(6.0, 2.0, 1.0)];
        let t = BSplineTrajectory::clamped(4, pts.clone()).unwrap();
        let path = t.sample(2, false).unwrap();
        assert_eq!(path.len(), 2);
        assert_abs_diff_eq!((path.first() - pts[0]).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((path.last() - pts[3]).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn sample_rejects_fewer_than_two() {
        let t = BSplineTrajectory::clamped(2, vec![v(0.0, 0.0, 0.0), v(2.0, 0.0, 0.0)]).unwrap();
        assert!(matches!(t.sample(1, false), Err(GeometryError::InvalidConfig(_))));
    }

    #[test]
    fn straight_polygon_samples_are_collinear() {
        let dir = v(1.0, 2.0, -0.5).normalize();
        let pts: Vec<Vec3> = [0.0, 1.0, 4.0, 4.5, 9.0, 10.0].iter().map(|s| dir * *s).collect();
        let path = BSplineTrajectory::clamped(4, pts).unwrap().sample(40, false).unwrap();
        for p in path.points() {
            assert!(p.cross(&dir).norm() < 1e-12);
        }
    }

    #[test]
    fn arc_length_examples() {
        let seg = SampledPath::from_points((0..7).map(|j| v(3.0, 4.0, 0.0) * (j as f64 / 6.0)).collect()).unwrap();
        assert_abs_diff_eq!(seg.arc_length(), 5.0, epsilon = 1e-12);
        let still = SampledPath::from_points(vec![v(1.0, 1.0, 1.0); 5]).unwrap();
        assert_eq!(still.arc_length(), 0.0);
        let square = SampledPath::from_points(vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(1.0, 1.0, 0.0), v(0.0, 1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(square.arc_length(), 3.0, epsilon = 1e-15);
    }

    #[test]
    fn sampled_path_rejects_non_increasing_params() {
        let pts = vec![Vec3::zeros(); 3];
        assert!(SampledPath::new(vec![0.0, 0.5, 0.5], pts.clone(), None).is_err());
        assert!(SampledPath::new(vec![0.0], vec![Vec3::zeros()], None).is_err());
    }

    #[test]
    fn basis_table_matches_direct_sampling() {
        let pts = vec![v(0.0, 0.0, 0.0), v(1.0, 5.0, 2.0), v(3.0, -1.0, 4.0), v(6.0, 2.0, 1.0), v(7.0, 7.0, 7.0), v(9.0, 1.0, 0.0), v(2.0, 2.0, 2.0)];
        for order in 2..=5 {
            let t = BSplineTrajectory::clamped(order, pts.clone()).unwrap();
            let table = BasisTable::new(t.knots(), order, 37).unwrap();
            let a = t.sample(37, true).unwrap();
            let b = table.sample(&pts, true).unwrap();
            assert_eq!(a.params(), b.params());
            for (p, q) in a.points().iter().zip(b.points()) {
                assert_abs_diff_eq!((p - q).norm(), 0.0, epsilon = 1e-12);
            }
            for (p, q) in a.velocities().unwrap().iter().zip(b.velocities().unwrap()) {
                assert_abs_diff_eq!((p - q).norm(), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn point_at_distance_walks_polyline() {
        let square = SampledPath::from_points(vec![v(0.0, 0.0, 0.0), v(1.0, 0.0, 0.0), v(1.0, 1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!((square.point_at_distance(1.5) - v(1.0, 0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(square.point_at_distance(10.0), v(1.0, 1.0, 0.0));
    }
}
