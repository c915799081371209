use super::EstimationError;
use crate::geometry::{cross, Contour, Pose2, Vec2};

/// Environment estimate: the support of the surviving hypotheses, stored
/// as its convex hull plus the member points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnvRegion {
    pub hull: Vec<Vec2>,
    pub members: Vec<Vec2>,
}

impl EnvRegion {
    pub fn from_points(points: Vec<Vec2>) -> Self {
        Self {
            hull: convex_hull(&points),
            members: points,
        }
    }

    /// Region covering a polygon, e.g. the initial prior coverage.
    pub fn from_contour(c: &Contour) -> Self {
        Self::from_points(c.vertices().to_vec())
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn area(&self) -> f64 {
        if self.hull.len() < 3 {
            return 0.0;
        }
        crate::geometry::signed_area(&self.hull)
    }

    /// Membership in the hull, with a small boundary band.
    pub fn contains(&self, p: &Vec2) -> bool {
        const TOL: f64 = 1e-6;
        match self.hull.len() {
            0 => false,
            1 => (p - self.hull[0]).norm() <= TOL,
            2 => crate::geometry::point_segment_distance(p, &self.hull[0], &self.hull[1]) <= TOL,
            n => (0..n).all(|i| {
                let a = self.hull[i];
                let b = self.hull[(i + 1) % n];
                let e = b - a;
                cross(&e, &(p - a)) >= -TOL * e.norm()
            }),
        }
    }
}

/// Counterclockwise convex hull (Andrew's monotone chain), collinear
/// points dropped.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::new();
    for p in &pts {
        while lower.len() >= 2
            && cross(
                &(lower[lower.len() - 1] - lower[lower.len() - 2]),
                &(p - lower[lower.len() - 2]),
            ) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2
            && cross(
                &(upper[upper.len() - 1] - upper[upper.len() - 2]),
                &(p - upper[upper.len() - 2]),
            ) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Intersects the previous environment region with the placements
/// implied by the current particle support.
///
/// Particles are reference-point hypotheses relative to the environment
/// frame, so a particle `p` places the environment at `l_t − p`.
pub fn env_region_update(
    e_prev: &EnvRegion,
    l_t: &Pose2,
    particle_support: &[Vec2],
) -> Result<EnvRegion, EstimationError> {
    let origin = l_t.translation();
    let members: Vec<Vec2> = particle_support
        .iter()
        .map(|p| origin - p)
        .filter(|q| e_prev.contains(q))
        .collect();
    if members.is_empty() {
        return Err(EstimationError::BeliefCollapse);
    }
    Ok(EnvRegion::from_points(members))
}
