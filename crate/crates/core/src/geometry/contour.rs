use super::{
    cross, point_segment_distance, segment_intersection, signed_area, GeometryError, Pose2, Vec2, AREA_TOL,
    PENETRATION_TOL,
};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Label identifying a contour within a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContourId(pub u32);

impl fmt::Display for ContourId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub start: Vec2,
    pub end: Vec2,
    /// Unit outward normal.
    pub normal: Vec2,
}

impl Edge {
    fn between(start: Vec2, end: Vec2) -> Self {
        let e = end - start;
        let normal = Vec2::new(e.y, -e.x).normalize();
        Self { start, end, normal }
    }

    pub fn midpoint(&self) -> Vec2 {
        (self.start + self.end) * 0.5
    }

    pub fn direction(&self) -> Vec2 {
        (self.end - self.start).normalize()
    }

    pub fn length(&self) -> f64 {
        (self.end - self.start).norm()
    }
}

/// Simple polygon with vertices in counterclockwise order.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    id: ContourId,
    vertices: Vec<Vec2>,
    edges: Vec<Edge>,
}

impl Contour {
    /// Builds a contour, reversing clockwise input. Rejects degenerate and
    /// self-intersecting polygons.
    pub fn new(id: ContourId, vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if let Some(i) = vertices.iter().position(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(GeometryError::NonFinite(i));
        }
        let area = signed_area(&vertices);
        if area.abs() < AREA_TOL {
            return Err(GeometryError::Degenerate(area));
        }
        let mut vertices = vertices;
        if area < 0.0 {
            vertices.reverse();
        }
        let edges = Self::derive_edges(&vertices);
        let n = edges.len();
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (&edges[i], &edges[j]);
                if segment_intersection(&a.start, &a.end, &b.start, &b.end).is_some() {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        Ok(Self { id, vertices, edges })
    }

    /// Axis-aligned rectangle centred at `center`.
    pub fn rectangle(id: ContourId, center: Vec2, width: f64, height: f64) -> Result<Self, GeometryError> {
        let (hw, hh) = (width * 0.5, height * 0.5);
        Self::new(
            id,
            vec![
                center + Vec2::new(-hw, -hh),
                center + Vec2::new(hw, -hh),
                center + Vec2::new(hw, hh),
                center + Vec2::new(-hw, hh),
            ],
        )
    }

    fn derive_edges(vertices: &[Vec2]) -> Vec<Edge> {
        let n = vertices.len();
        (0..n)
            .map(|i| Edge::between(vertices[i], vertices[(i + 1) % n]))
            .collect()
    }

    pub fn id(&self) -> ContourId {
        self.id
    }

    pub fn with_id(mut self, id: ContourId) -> Self {
        self.id = id;
        self
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Area centroid.
    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len();
        let mut c = Vec2::zeros();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            c += (a + b) * cross(&a, &b);
        }
        c / (6.0 * self.area())
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Rotates by `pose.theta` about the origin, then translates.
    pub fn transformed(&self, pose: &Pose2) -> Contour {
        let vertices: Vec<Vec2> = self.vertices.iter().map(|v| pose.transform_point(v)).collect();
        let edges = Self::derive_edges(&vertices);
        Contour {
            id: self.id,
            vertices,
            edges,
        }
    }

    pub fn translated(&self, offset: Vec2) -> Contour {
        let vertices: Vec<Vec2> = self.vertices.iter().map(|v| v + offset).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                start: e.start + offset,
                end: e.end + offset,
                normal: e.normal,
            })
            .collect();
        Contour {
            id: self.id,
            vertices,
            edges,
        }
    }

    pub fn distance_to_boundary(&self, p: &Vec2) -> f64 {
        self.edges
            .iter()
            .map(|e| point_segment_distance(p, &e.start, &e.end))
            .fold(f64::INFINITY, f64::min)
    }

    /// Strict even-odd interior test, ignoring the boundary tolerance.
    pub fn contains_strict(&self, p: &Vec2) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[j]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Even-odd membership with the boundary band counted as inside.
    pub fn contains(&self, p: &Vec2) -> bool {
        self.contains_strict(p) || self.distance_to_boundary(p) <= PENETRATION_TOL
    }

    /// Depth of `p` inside the polygon (0 when outside).
    pub fn depth_of(&self, p: &Vec2) -> f64 {
        if self.contains_strict(p) {
            self.distance_to_boundary(p)
        } else {
            0.0
        }
    }

    /// Vertices as `[x, y]` rows, handy for serialization.
    pub fn vertex_rows(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|v| [v.x, v.y]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    fn square() -> Contour {
        Contour::new(
            ContourId(1),
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(10.0, 0.0),
                Vec2::new(10.0, 10.0),
                Vec2::new(0.0, 10.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn square_normals() {
        let c = square();
        let normals: Vec<Vec2> = c.edges().iter().map(|e| e.normal).collect();
        let expected = [
            Vec2::new(0.0, -1.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(-1.0, 0.0),
        ];
        for (n, e) in normals.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(n, e, epsilon = 1e-15);
        }
        assert_eq!(c.edges().len(), 4);
    }

    #[test]
    fn clockwise_input_is_canonicalized() {
        let cw = Contour::new(
            ContourId(1),
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(0.0, 10.0),
                Vec2::new(10.0, 10.0),
                Vec2::new(10.0, 0.0),
            ],
        )
        .unwrap();
        assert!(cw.area() > 0.0);
        // Same vertex cycle, possibly with a different starting vertex.
        let sq = square();
        let start = cw.vertices().iter().position(|v| *v == sq.vertices()[0]).unwrap();
        for i in 0..4 {
            assert_eq!(cw.vertices()[(start + i) % 4], sq.vertices()[i]);
        }
    }

    #[test]
    fn triangle_hypotenuse_normal() {
        let t = Contour::new(
            ContourId(2),
            vec![Vec2::new(0.0, 0.0), Vec2::new(20.0, 0.0), Vec2::new(0.0, 20.0)],
        )
        .unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_abs_diff_eq!(t.edges()[1].normal, Vec2::new(h, h), epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_polygons() {
        assert!(matches!(
            Contour::new(ContourId(0), vec![Vec2::zeros(), Vec2::new(1.0, 0.0)]),
            Err(GeometryError::TooFewVertices(2))
        ));
        assert!(matches!(
            Contour::new(
                ContourId(0),
                vec![Vec2::zeros(), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)]
            ),
            Err(GeometryError::Degenerate(_))
        ));
        // bow-tie
        assert!(matches!(
            Contour::new(
                ContourId(0),
                vec![
                    Vec2::new(0.0, 0.0),
                    Vec2::new(10.0, 10.0),
                    Vec2::new(10.0, 0.0),
                    Vec2::new(0.0, 15.0),
                ]
            ),
            Err(GeometryError::SelfIntersecting(_, _))
        ));
    }

    #[test]
    fn transform_examples() {
        let c = square();
        assert_eq!(c.transformed(&Pose2::identity()), c);
        let shifted = c.transformed(&Pose2::new(5.0, 0.0, 0.0));
        for (a, b) in shifted.vertices().iter().zip(c.vertices()) {
            assert_abs_diff_eq!(a.x, b.x + 5.0);
            assert_abs_diff_eq!(a.y, b.y);
        }
        for (a, b) in shifted.edges().iter().zip(c.edges()) {
            assert_abs_diff_eq!(a.normal, b.normal, epsilon = 1e-15);
        }
        // Rotation by 90° maps each normal onto the next edge's normal.
        let rotated = c.transformed(&Pose2::new(0.0, 0.0, FRAC_PI_2));
        for i in 0..4 {
            assert_abs_diff_eq!(
                rotated.edges()[i].normal,
                c.edges()[(i + 1) % 4].normal,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn membership() {
        let c = square();
        assert!(c.contains(&Vec2::new(5.0, 5.0)));
        assert!(!c.contains(&Vec2::new(15.0, 5.0)));
        assert!(c.contains(&Vec2::new(10.0, 5.0)));
        assert!(c.contains(&Vec2::new(10.0005, 5.0)));
        assert!(!c.contains(&Vec2::new(10.01, 5.0)));
    }

    #[test]
    fn centroid_of_square() {
        assert_abs_diff_eq!(square().centroid(), Vec2::new(5.0, 5.0), epsilon = 1e-12);
    }
}
