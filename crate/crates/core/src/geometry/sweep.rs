use super::{
    cross, segment_intersection, Contour, ContourId, GeometryError, Vec2, NORMAL_ANTIPARALLEL_COS, PENETRATION_TOL,
};
use serde::{Deserialize, Serialize};
use std::fmt;

/// One edge of one contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRef {
    pub contour: ContourId,
    pub edge: usize,
}

/// Environment edge touching an edge of the moving object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContactPair {
    pub env_edge: EdgeRef,
    pub obj_edge: EdgeRef,
}

impl ContactPair {
    pub fn new(env: ContourId, env_edge: usize, obj: ContourId, obj_edge: usize) -> Self {
        Self {
            env_edge: EdgeRef {
                contour: env,
                edge: env_edge,
            },
            obj_edge: EdgeRef {
                contour: obj,
                edge: obj_edge,
            },
        }
    }

    /// True when the two unit normals are antiparallel within tolerance.
    pub fn normals_antiparallel(env_normal: &Vec2, obj_normal: &Vec2) -> bool {
        env_normal.dot(obj_normal) <= NORMAL_ANTIPARALLEL_COS
    }
}

impl fmt::Display for ContactPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}/{}:{}",
            self.env_edge.contour, self.env_edge.edge, self.obj_edge.contour, self.obj_edge.edge
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepHit {
    /// Translation along the sweep direction at first contact, mm.
    pub distance: f64,
    pub pair: ContactPair,
    pub contact_point: Vec2,
    pub env_normal: Vec2,
    pub obj_normal: Vec2,
    /// Unit contact normal acting on the moving body. Equals `env_normal`
    /// for face contacts and follows the touched face for vertex contacts.
    pub normal: Vec2,
}

fn boxes_overlap(a: &(Vec2, Vec2), b: &(Vec2, Vec2), pad: f64) -> bool {
    a.0.x <= b.1.x + pad && b.0.x <= a.1.x + pad && a.0.y <= b.1.y + pad && b.0.y <= a.1.y + pad
}

/// Depth of the deepest boundary point of `a` inside `b`, sampled at the
/// vertices of `a` and at the midpoints between boundary crossings.
fn one_sided_depth(a: &Contour, b: &Contour) -> f64 {
    let mut depth = 0.0f64;
    let mut params = Vec::with_capacity(8);
    for e in a.edges() {
        params.clear();
        params.push(0.0);
        params.push(1.0);
        for f in b.edges() {
            if let Some((s, _)) = segment_intersection(&e.start, &e.end, &f.start, &f.end) {
                params.push(s.clamp(0.0, 1.0));
            }
        }
        params.sort_by(f64::total_cmp);
        depth = depth.max(b.depth_of(&e.start));
        for w in params.windows(2) {
            if w[1] - w[0] > 1e-12 {
                let mid = e.start + (e.end - e.start) * (0.5 * (w[0] + w[1]));
                depth = depth.max(b.depth_of(&mid));
            }
        }
    }
    depth
}

/// Approximate interpenetration depth of two contours (0 when disjoint or
/// merely touching).
pub fn penetration_depth(a: &Contour, b: &Contour) -> f64 {
    if !boxes_overlap(&a.bounds(), &b.bounds(), 0.0) {
        return 0.0;
    }
    one_sided_depth(a, b).max(one_sided_depth(b, a))
}

struct Candidate {
    t: f64,
    /// Static contour index; set when the hit lies at an edge endpoint and
    /// may be a graze.
    endpoint_of: Option<usize>,
    pair: ContactPair,
    env_normal: Vec2,
    obj_normal: Vec2,
    normal: Vec2,
    point: Vec2,
}

const GRAZE_PROBE: f64 = 0.05;
const GRAZE_DEPTH: f64 = 1e-7;

fn corner_normal(env_normal: &Vec2, obj_normal: &Vec2) -> Vec2 {
    let n = env_normal - obj_normal;
    if n.norm() > 1e-12 {
        n.normalize()
    } else {
        *env_normal
    }
}

fn at_endpoint(s: f64) -> bool {
    !(1e-6..=1.0 - 1e-6).contains(&s)
}

/// Ray `o + t·u` against segment `a-b`: returns `(t, s)`.
fn ray_segment(o: &Vec2, u: &Vec2, a: &Vec2, b: &Vec2) -> Option<(f64, f64)> {
    let e = b - a;
    let denom = cross(u, &e);
    if denom.abs() <= 1e-12 * e.norm() {
        return None;
    }
    let w = a - o;
    let t = cross(&w, &e) / denom;
    let s = cross(&w, u) / denom;
    const EPS: f64 = 1e-9;
    if (-EPS..=1.0 + EPS).contains(&s) {
        Some((t, s))
    } else {
        None
    }
}

fn prev(i: usize, n: usize) -> usize {
    (i + n - 1) % n
}

/// Edge indices touching a point at parameter `s` along edge `i`.
fn edges_at(i: usize, s: f64, n: usize) -> ([usize; 2], usize) {
    const EPS: f64 = 1e-9;
    if s <= EPS {
        ([i, prev(i, n)], 2)
    } else if s >= 1.0 - EPS {
        ([i, (i + 1) % n], 2)
    } else {
        ([i, i], 1)
    }
}

fn best_pair(env: &Contour, env_edges: &[usize], obj: &Contour, obj_edges: &[usize]) -> (usize, usize, f64) {
    let mut best = (env_edges[0], obj_edges[0], f64::INFINITY);
    for &i in env_edges {
        for &j in obj_edges {
            let d = env.edges()[i].normal.dot(&obj.edges()[j].normal);
            if d < best.2 - 1e-12 {
                best = (i, j, d);
            }
        }
    }
    best
}

/// Midpoint of the overlap of two parallel edges, or `fallback`.
fn overlap_midpoint(env: &super::Edge, obj_start: Vec2, obj_end: Vec2, fallback: Vec2) -> Vec2 {
    let d = env.direction();
    let len = env.length();
    let p0 = (obj_start - env.start).dot(&d);
    let p1 = (obj_end - env.start).dot(&d);
    let lo = p0.min(p1).max(0.0);
    let hi = p0.max(p1).min(len);
    if hi >= lo {
        env.start + d * (0.5 * (lo + hi))
    } else {
        fallback
    }
}

/// Smallest translation of `moving` along unit `direction` (at most
/// `max_dist`) at which it touches any contour in `statics`.
///
/// Vertex contacts are attributed to the incident edges whose normals are
/// most nearly antiparallel, so the result is always an edge pair.
pub fn sweep_first_contact(
    moving: &Contour,
    direction: &Vec2,
    max_dist: f64,
    statics: &[Contour],
) -> Result<Option<SweepHit>, GeometryError> {
    let dn = direction.norm();
    if (dn - 1.0).abs() > 1e-9 {
        return Err(GeometryError::BadDirection(dn));
    }
    let u = *direction;
    let mb = moving.bounds();
    let far = (mb.0 + u * max_dist, mb.1 + u * max_dist);
    let swept = (mb.0.inf(&far.0), mb.1.sup(&far.1));

    let mut candidates: Vec<Candidate> = Vec::new();
    let nm = moving.len();
    for (si, s) in statics.iter().enumerate() {
        let sb = s.bounds();
        if boxes_overlap(&mb, &sb, PENETRATION_TOL) {
            let depth = penetration_depth(moving, s);
            if depth > PENETRATION_TOL {
                return Err(GeometryError::InitialPenetration {
                    moving: moving.id(),
                    fixed: s.id(),
                    depth,
                });
            }
        }
        if !boxes_overlap(&swept, &sb, PENETRATION_TOL) {
            continue;
        }
        let ns = s.len();
        // moving vertices against static edges
        for (i, v) in moving.vertices().iter().enumerate() {
            for (j, e) in s.edges().iter().enumerate() {
                if u.dot(&e.normal) >= -1e-12 {
                    continue;
                }
                if let Some((t, sp)) = ray_segment(v, &u, &e.start, &e.end) {
                    if t < -PENETRATION_TOL || t > max_dist {
                        continue;
                    }
                    let (env_set, k) = edges_at(j, sp, ns);
                    let obj_set = [i, prev(i, nm)];
                    let (ei, oi, _) = best_pair(s, &env_set[..k], moving, &obj_set);
                    let (en, on) = (s.edges()[ei].normal, moving.edges()[oi].normal);
                    candidates.push(Candidate {
                        t: t.max(0.0),
                        endpoint_of: at_endpoint(sp).then_some(si),
                        pair: ContactPair::new(s.id(), ei, moving.id(), oi),
                        env_normal: en,
                        obj_normal: on,
                        normal: if k == 1 { e.normal } else { corner_normal(&en, &on) },
                        point: v + u * t.max(0.0),
                    });
                }
            }
        }
        // static vertices against moving edges, cast backwards
        let back = -u;
        for (k, v) in s.vertices().iter().enumerate() {
            for (m, e) in moving.edges().iter().enumerate() {
                if u.dot(&e.normal) <= 1e-12 {
                    continue;
                }
                if let Some((t, sp)) = ray_segment(v, &back, &e.start, &e.end) {
                    if t < -PENETRATION_TOL || t > max_dist {
                        continue;
                    }
                    let (obj_set, c) = edges_at(m, sp, nm);
                    let env_set = [k, prev(k, ns)];
                    let (ei, oi, _) = best_pair(s, &env_set, moving, &obj_set[..c]);
                    let (en, on) = (s.edges()[ei].normal, moving.edges()[oi].normal);
                    candidates.push(Candidate {
                        t: t.max(0.0),
                        endpoint_of: at_endpoint(sp).then_some(si),
                        pair: ContactPair::new(s.id(), ei, moving.id(), oi),
                        env_normal: en,
                        obj_normal: on,
                        normal: if c == 1 { -e.normal } else { corner_normal(&en, &on) },
                        point: *v,
                    });
                }
            }
        }
    }

    // Vertex-on-vertex touches between edges collinear with the motion
    // only graze; they block nothing if the bodies stay disjoint just past.
    candidates.retain(|c| match c.endpoint_of {
        Some(si) => {
            let past = moving.translated(u * (c.t + GRAZE_PROBE));
            penetration_depth(&past, &statics[si]) > GRAZE_DEPTH
        }
        None => true,
    });
    let t_min = match candidates.iter().map(|c| c.t).min_by(f64::total_cmp) {
        Some(t) => t,
        None => return Ok(None),
    };
    let best = candidates
        .iter()
        .filter(|c| c.t <= t_min + 1e-9)
        .min_by(|a, b| {
            a.env_normal
                .dot(&a.obj_normal)
                .total_cmp(&b.env_normal.dot(&b.obj_normal))
                .then(a.pair.cmp(&b.pair))
        })
        .expect("non-empty");

    let mut point = best.point;
    let mut normal = best.normal;
    if ContactPair::normals_antiparallel(&best.env_normal, &best.obj_normal) {
        normal = best.env_normal;
        let s = statics
            .iter()
            .find(|c| c.id() == best.pair.env_edge.contour)
            .expect("pair refers to a static contour");
        let env_edge = &s.edges()[best.pair.env_edge.edge];
        let obj_edge = &moving.edges()[best.pair.obj_edge.edge];
        let shift = u * best.t;
        point = overlap_midpoint(env_edge, obj_edge.start + shift, obj_edge.end + shift, point);
    }
    Ok(Some(SweepHit {
        distance: t_min,
        pair: best.pair,
        contact_point: point,
        env_normal: best.env_normal,
        obj_normal: best.obj_normal,
        normal,
    }))
}
