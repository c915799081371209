//! Planar geometry: poses, counterclockwise polygon contours, and swept
//! first-contact queries.
//!
//! Every other module works on top of these primitives. All values are
//! immutable once built, so contours can be shared freely across threads.

mod contour;
mod sweep;

pub use contour::{Contour, ContourId, Edge};
pub use sweep::{penetration_depth, sweep_first_contact, ContactPair, EdgeRef, SweepHit};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Antiparallel threshold on the dot product of two unit normals (cos 175°).
pub const NORMAL_ANTIPARALLEL_COS: f64 = -0.996_194_698_091_745_5;
/// Penetration tolerance, mm.
pub const PENETRATION_TOL: f64 = 1e-3;
/// Minimum polygon area, mm².
pub const AREA_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("contour needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("degenerate contour: |area| = {0:.3e} mm²")]
    Degenerate(f64),
    #[error("contour self-intersects: edges {0} and {1} cross")]
    SelfIntersecting(usize, usize),
    #[error("non-finite vertex at index {0}")]
    NonFinite(usize),
    #[error("moving contour {moving} penetrates contour {fixed} by {depth:.4} mm")]
    InitialPenetration {
        moving: ContourId,
        fixed: ContourId,
        depth: f64,
    },
    #[error("sweep direction must be a unit vector, |d| = {0}")]
    BadDirection(f64),
}

/// 2-D cross product (z component).
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

/// Planar rigid pose in mm / rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Default for Pose2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_angle(theta),
        }
    }

    pub const fn identity() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
        }
    }

    pub fn from_translation(t: Vec2) -> Self {
        Self::new(t.x, t.y, 0.0)
    }

    pub fn translation(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn rotate(&self, v: &Vec2) -> Vec2 {
        let (s, c) = self.theta.sin_cos();
        Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    pub fn transform_point(&self, p: &Vec2) -> Vec2 {
        self.rotate(p) + self.translation()
    }

    /// `self ∘ inner`: applies `inner` first, then `self`.
    pub fn compose(&self, inner: &Pose2) -> Pose2 {
        let t = self.transform_point(&inner.translation());
        Pose2::new(t.x, t.y, self.theta + inner.theta)
    }

    pub fn inverse(&self) -> Pose2 {
        let inv = Pose2::new(0.0, 0.0, -self.theta);
        let t = inv.rotate(&self.translation());
        Pose2::new(-t.x, -t.y, -self.theta)
    }

    /// Component-wise difference with the angle wrapped.
    pub fn minus(&self, other: &Pose2) -> [f64; 3] {
        [self.x - other.x, self.y - other.y, wrap_angle(self.theta - other.theta)]
    }
}

/// Polygon signed area (positive for counterclockwise order).
pub fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    (0..n).map(|i| cross(&vertices[i], &vertices[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Even-odd point membership; points within the penetration tolerance of
/// the boundary count as inside.
pub fn point_in_region(p: &Vec2, region: &Contour) -> bool {
    region.contains(p)
}

/// Closest distance from `p` to the segment `a`-`b`.
pub fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

/// Proper or touching segment intersection parameters `(s, t)` along
/// `a0-a1` and `b0-b1`. Parallel segments return `None`.
pub(crate) fn segment_intersection(a0: &Vec2, a1: &Vec2, b0: &Vec2, b1: &Vec2) -> Option<(f64, f64)> {
    let da = a1 - a0;
    let db = b1 - b0;
    let denom = cross(&da, &db);
    let scale = da.norm() * db.norm();
    if denom.abs() <= 1e-12 * scale.max(1e-300) {
        return None;
    }
    let w = b0 - a0;
    let s = cross(&w, &db) / denom;
    let t = cross(&w, &da) / denom;
    const EPS: f64 = 1e-12;
    if (-EPS..=1.0 + EPS).contains(&s) && (-EPS..=1.0 + EPS).contains(&t) {
        Some((s, t))
    } else {
        None
    }
}

/// Unit vectors for the eight compass directions, starting at east and
/// proceeding counterclockwise.
pub fn compass_directions() -> [(&'static str, Vec2); 8] {
    let d = std::f64::consts::FRAC_1_SQRT_2;
    [
        ("E", Vec2::new(1.0, 0.0)),
        ("NE", Vec2::new(d, d)),
        ("N", Vec2::new(0.0, 1.0)),
        ("NW", Vec2::new(-d, d)),
        ("W", Vec2::new(-1.0, 0.0)),
        ("SW", Vec2::new(-d, -d)),
        ("S", Vec2::new(0.0, -1.0)),
        ("SE", Vec2::new(d, -d)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wrap_keeps_half_open_interval() {
        assert_abs_diff_eq!(wrap_angle(PI), PI);
        assert_abs_diff_eq!(wrap_angle(-PI), PI);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(6.2), 6.2 - 2.0 * PI, epsilon = 1e-12);
    }

    #[test]
    fn pose_compose_and_inverse() {
        let a = Pose2::new(3.0, -2.0, 0.7);
        let b = Pose2::new(-1.0, 5.0, -2.1);
        let p = Vec2::new(0.3, 4.0);
        let ab = a.compose(&b);
        let lhs = ab.transform_point(&p);
        let rhs = a.transform_point(&b.transform_point(&p));
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        let id = a.compose(&a.inverse());
        assert_abs_diff_eq!(id.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(id.theta, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn compass_is_unit() {
        for (_, d) in compass_directions() {
            assert_abs_diff_eq!(d.norm(), 1.0, epsilon = 1e-15);
        }
    }
}
