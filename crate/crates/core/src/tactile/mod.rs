//! Tactile perception on a two-finger gripper.
//!
//! Each finger carries a sensor that reports a resultant force and torque
//! in its own frame. From the pair we recover the net external force on the
//! grasped object, its moment about the equivalent rotation point `O_e`, and
//! the point on the object surface where that force acts.
//!
//! Torques are moments of the form `r × f`, with `r` running from the
//! reference point to the point of application.

mod calibration;
mod registration;

pub use calibration::{
    calibrate_lever_arms, read_samples_csv, write_samples_csv, CalibrationResult, CalibrationSample, ResidualStats,
};
pub use registration::{in_hand_transform, kabsch_registration, MarkerField, RigidFit};

use crate::geometry::{Contour, Vec2};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

/// Net-force magnitude below which no contact is reported, N.
pub const F_MIN: f64 = 0.05;
/// Allowed miss distance between line of action and object surface, mm.
pub const SURFACE_GATE: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TactileError {
    #[error("expected a {expected:?} wrench, got {got:?}")]
    FrameMismatch { expected: FrameId, got: FrameId },
    #[error("net force {0:.4} N is below the contact threshold")]
    NoContact(f64),
    #[error("line of action misses the object surface by {0:.3} mm")]
    InconsistentMeasurement(f64),
    #[error("need at least {need} calibration samples, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("calibration system is rank deficient (rank {rank}/6); unobservable: {directions}")]
    RankDeficient { rank: usize, directions: String },
    #[error("marker field invalid: {0}")]
    MarkerField(String),
    #[error("marker points are collinear; rotation about their axis is unobservable")]
    CollinearMarkers,
    #[error("calibration data: {0}")]
    Data(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrameId {
    LeftSensor,
    RightSensor,
    Gripper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
    pub frame: FrameId,
}

impl Wrench {
    pub fn new(force: Vec3, torque: Vec3, frame: FrameId) -> Self {
        Self { force, torque, frame }
    }

    pub fn zero(frame: FrameId) -> Self {
        Self::new(Vec3::zeros(), Vec3::zeros(), frame)
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|v| v.is_finite())
    }

    fn expect_frame(&self, frame: FrameId) -> Result<(), TactileError> {
        if self.frame == frame {
            Ok(())
        } else {
            Err(TactileError::FrameMismatch {
                expected: frame,
                got: self.frame,
            })
        }
    }
}

/// Signed axis permutations taking each sensor frame into the gripper
/// frame. The two sensors face each other, so their axes are mirrored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorAxisMap {
    pub left: Matrix3<f64>,
    pub right: Matrix3<f64>,
}

impl Default for SensorAxisMap {
    /// Gripper x ← sensor y, gripper y ← sensor z, gripper z ← sensor x,
    /// with the left sensor contributing `(-y, +z, +x)` and the right
    /// `(+y, -z, -x)`.
    fn default() -> Self {
        Self {
            left: Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0),
            right: Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, -1.0, -1.0, 0.0, 0.0),
        }
    }
}

impl SensorAxisMap {
    /// Re-expresses a sensor wrench in the gripper frame.
    pub fn to_gripper(&self, w: &Wrench) -> Wrench {
        let m = match w.frame {
            FrameId::LeftSensor => &self.left,
            FrameId::RightSensor => &self.right,
            FrameId::Gripper => return *w,
        };
        Wrench::new(m * w.force, m * w.torque, FrameId::Gripper)
    }

    /// Inverse of [`to_gripper`](Self::to_gripper).
    pub fn to_sensor(&self, w: &Wrench, frame: FrameId) -> Wrench {
        let m = match frame {
            FrameId::LeftSensor => &self.left,
            FrameId::RightSensor => &self.right,
            FrameId::Gripper => return *w,
        };
        // signed permutations are orthogonal
        let inv = m.transpose();
        Wrench::new(inv * w.force, inv * w.torque, frame)
    }
}

/// Offsets from `O_e` to each sensor origin, gripper frame, mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverArms {
    pub left: Vec3,
    pub right: Vec3,
}

impl Default for LeverArms {
    fn default() -> Self {
        Self {
            left: Vec3::new(0.0, 20.0, 5.0),
            right: Vec3::new(0.0, -20.0, 5.0),
        }
    }
}

/// Net force on the grasped object in the gripper frame:
/// `(F_y^R − F_y^L, F_z^L − F_z^R, F_x^L − F_x^R)`.
pub fn net_force(left: &Wrench, right: &Wrench) -> Result<Vec3, TactileError> {
    net_force_with(&SensorAxisMap::default(), left, right)
}

pub fn net_force_with(map: &SensorAxisMap, left: &Wrench, right: &Wrench) -> Result<Vec3, TactileError> {
    left.expect_frame(FrameId::LeftSensor)?;
    right.expect_frame(FrameId::RightSensor)?;
    Ok(map.to_gripper(left).force + map.to_gripper(right).force)
}

/// Moment of `w` about a point displaced by `-offset` from the wrench
/// origin, i.e. `torque + offset × force`.
pub fn torque_about(w: &Wrench, offset: &Vec3) -> Vec3 {
    w.torque + offset.cross(&w.force)
}

/// Summed moment about `O_e` from both sensors.
pub fn resultant_torque(left: &Wrench, right: &Wrench, arms: &LeverArms) -> Result<Vec3, TactileError> {
    resultant_torque_with(&SensorAxisMap::default(), left, right, arms)
}

pub fn resultant_torque_with(
    map: &SensorAxisMap,
    left: &Wrench,
    right: &Wrench,
    arms: &LeverArms,
) -> Result<Vec3, TactileError> {
    left.expect_frame(FrameId::LeftSensor)?;
    right.expect_frame(FrameId::RightSensor)?;
    Ok(torque_about(&map.to_gripper(left), &arms.left) + torque_about(&map.to_gripper(right), &arms.right))
}

/// Grasped object as a prism: planar contour (gripper x-y, relative to
/// `O_e`) extruded over `[z_min, z_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrismBody {
    pub contour: Contour,
    pub z_min: f64,
    pub z_max: f64,
}

struct SurfaceHit {
    t: f64,
    point: Vec3,
    normal: Vec3,
}

impl PrismBody {
    pub fn new(contour: Contour, z_min: f64, z_max: f64) -> Self {
        assert!(z_max > z_min, "prism needs a positive height");
        Self { contour, z_min, z_max }
    }

    fn line_hits(&self, origin: &Vec3, dir: &Vec3) -> Vec<SurfaceHit> {
        const TOL: f64 = 1e-9;
        let mut hits = Vec::new();
        let o2 = Vec2::new(origin.x, origin.y);
        let d2 = Vec2::new(dir.x, dir.y);
        for e in self.contour.edges() {
            let denom = d2.dot(&e.normal);
            if denom.abs() < 1e-12 {
                continue;
            }
            let t = (e.start - o2).dot(&e.normal) / denom;
            let p = origin + dir * t;
            let along = e.end - e.start;
            let s = (Vec2::new(p.x, p.y) - e.start).dot(&along) / along.norm_squared();
            if (-TOL..=1.0 + TOL).contains(&s) && p.z >= self.z_min - TOL && p.z <= self.z_max + TOL {
                hits.push(SurfaceHit {
                    t,
                    point: p,
                    normal: Vec3::new(e.normal.x, e.normal.y, 0.0),
                });
            }
        }
        if dir.z.abs() > 1e-12 {
            for (z, nz) in [(self.z_max, 1.0), (self.z_min, -1.0)] {
                let t = (z - origin.z) / dir.z;
                let p = origin + dir * t;
                if self.contour.contains(&Vec2::new(p.x, p.y)) {
                    hits.push(SurfaceHit {
                        t,
                        point: p,
                        normal: Vec3::new(0.0, 0.0, nz),
                    });
                }
            }
        }
        hits
    }

    /// Closest point on the prism surface to `q`.
    pub fn closest_surface_point(&self, q: &Vec3) -> Vec3 {
        let q2 = Vec2::new(q.x, q.y);
        let inside_xy = self.contour.contains_strict(&q2);
        let nearest_rim = |p: &Vec2| -> Vec2 {
            let mut best = (f64::INFINITY, *p);
            for e in self.contour.edges() {
                let ab = e.end - e.start;
                let s = ((p - e.start).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
                let c = e.start + ab * s;
                let d = (p - c).norm();
                if d < best.0 {
                    best = (d, c);
                }
            }
            best.1
        };
        let zc = q.z.clamp(self.z_min, self.z_max);
        if !inside_xy {
            let r = nearest_rim(&q2);
            return Vec3::new(r.x, r.y, zc);
        }
        if q.z > self.z_max || q.z < self.z_min {
            return Vec3::new(q.x, q.y, zc);
        }
        // interior: nearest of side wall and caps
        let r = nearest_rim(&q2);
        let side = (r - q2).norm();
        let top = self.z_max - q.z;
        let bottom = q.z - self.z_min;
        if side <= top && side <= bottom {
            Vec3::new(r.x, r.y, q.z)
        } else if top <= bottom {
            Vec3::new(q.x, q.y, self.z_max)
        } else {
            Vec3::new(q.x, q.y, self.z_min)
        }
    }
}

/// Recovers the contact point from the net force and its moment about
/// `O_e`.
///
/// `C × F = M` only fixes the line of action `C0 + t·F`, with
/// `C0 = F × M / |F|²`; the contact is where that line enters the known
/// object surface through a face whose outward normal opposes `F`.
pub fn estimate_contact_point(net_f: &Vec3, net_m: &Vec3, body: &PrismBody) -> Result<Vec3, TactileError> {
    let fmag = net_f.norm();
    if fmag <= F_MIN {
        return Err(TactileError::NoContact(fmag));
    }
    let dir = net_f / fmag;
    let c0 = net_f.cross(net_m) / (fmag * fmag);
    let entry = body
        .line_hits(&c0, &dir)
        .into_iter()
        .filter(|h| h.normal.dot(&dir) < 0.0)
        .min_by(|a, b| a.t.total_cmp(&b.t));
    if let Some(h) = entry {
        return Ok(h.point);
    }

    // Near miss: search along the line for the closest surface approach.
    let (lo, hi) = body.contour.bounds();
    let center = Vec3::new(
        0.5 * (lo.x + hi.x),
        0.5 * (lo.y + hi.y),
        0.5 * (body.z_min + body.z_max),
    );
    let extent = (hi - lo).norm() + (body.z_max - body.z_min) + SURFACE_GATE;
    let t_mid = (center - c0).dot(&dir);
    let gap = |t: f64| {
        let p = c0 + dir * t;
        (p - body.closest_surface_point(&p)).norm()
    };
    let samples = 400;
    let mut best = (f64::INFINITY, t_mid);
    for k in 0..=samples {
        let t = t_mid - extent + 2.0 * extent * k as f64 / samples as f64;
        let g = gap(t);
        if g < best.0 {
            best = (g, t);
        }
    }
    let step = 2.0 * extent / samples as f64;
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    for _ in 0..60 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if gap(m1) < gap(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let t = 0.5 * (a + b);
    let miss = gap(t);
    if miss > SURFACE_GATE {
        return Err(TactileError::InconsistentMeasurement(miss));
    }
    let p = c0 + dir * t;
    Ok(body.closest_surface_point(&p))
}

/// One tactile observation: both finger wrenches plus the pad marker
/// field.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorReading {
    pub left: Wrench,
    pub right: Wrench,
    pub markers: MarkerField,
}

impl SensorReading {
    pub fn net_force(&self) -> Result<Vec3, TactileError> {
        net_force(&self.left, &self.right)
    }

    pub fn resultant_torque(&self, arms: &LeverArms) -> Result<Vec3, TactileError> {
        resultant_torque(&self.left, &self.right, arms)
    }
}

/// Forward model for the two-finger sensor pair: the readings that an
/// external force `force` acting at `point` (gripper frame, relative to
/// `O_e`) produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrenchSynthesizer {
    pub map: SensorAxisMap,
    pub arms: LeverArms,
    /// Grip (squeeze) force along the gripper y axis, N.
    pub grip_force: f64,
    /// Length scale of the left/right load split, mm.
    pub split_scale: f64,
}

impl Default for WrenchSynthesizer {
    fn default() -> Self {
        Self {
            map: SensorAxisMap::default(),
            arms: LeverArms::default(),
            grip_force: 5.0,
            split_scale: 20.0,
        }
    }
}

impl WrenchSynthesizer {
    /// Share of the external load carried by the left finger.
    pub fn left_share(&self, point: &Vec3) -> f64 {
        0.5 + 0.3 * (point.y / self.split_scale).tanh()
    }

    pub fn synthesize(&self, force: &Vec3, point: &Vec3) -> (Wrench, Wrench) {
        let lambda = self.left_share(point);
        let squeeze = Vec3::new(0.0, self.grip_force, 0.0);
        let f_left = force * lambda + squeeze;
        let f_right = force * (1.0 - lambda) - squeeze;
        let total = point.cross(force);
        let pad_moments = total - self.arms.left.cross(&f_left) - self.arms.right.cross(&f_right);
        let m_left = pad_moments * lambda;
        let m_right = pad_moments * (1.0 - lambda);
        let left = self
            .map
            .to_sensor(&Wrench::new(f_left, m_left, FrameId::Gripper), FrameId::LeftSensor);
        let right = self
            .map
            .to_sensor(&Wrench::new(f_right, m_right, FrameId::Gripper), FrameId::RightSensor);
        (left, right)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ContourId;
    use approx::assert_abs_diff_eq;

    fn left(f: [f64; 3]) -> Wrench {
        Wrench::new(Vec3::from(f), Vec3::zeros(), FrameId::LeftSensor)
    }
    fn right(f: [f64; 3]) -> Wrench {
        Wrench::new(Vec3::from(f), Vec3::zeros(), FrameId::RightSensor)
    }

    #[test]
    fn net_force_examples() {
        assert_eq!(
            net_force(&left([0.0, 0.0, 0.0]), &right([0.0, 1.0, 0.0])).unwrap(),
            Vec3::new(1.0, 0.0, 0.0)
        );
        assert_eq!(
            net_force(&left([0.0, 0.0, 2.0]), &right([0.0, 0.0, 2.0])).unwrap(),
            Vec3::zeros()
        );
        assert_eq!(
            net_force(&left([1.0, 2.0, 3.0]), &right([4.0, 5.0, 6.0])).unwrap(),
            Vec3::new(3.0, -3.0, -3.0)
        );
    }

    #[test]
    fn net_force_rejects_swapped_frames() {
        let l = left([1.0, 0.0, 0.0]);
        let r = right([1.0, 0.0, 0.0]);
        assert!(matches!(net_force(&r, &l), Err(TactileError::FrameMismatch { .. })));
    }

    #[test]
    fn swapping_readings_negates_net_force() {
        let a = [0.3, -1.2, 2.5];
        let b = [-0.7, 0.4, 1.1];
        let n1 = net_force(&left(a), &right(b)).unwrap();
        let n2 = net_force(&left(b), &right(a)).unwrap();
        assert_abs_diff_eq!(n1, -n2, epsilon = 1e-15);
    }

    #[test]
    fn torque_about_examples() {
        let w = Wrench::new(Vec3::new(0.0, 0.0, -1.0), Vec3::zeros(), FrameId::Gripper);
        assert_abs_diff_eq!(torque_about(&w, &Vec3::new(10.0, 0.0, 0.0)), Vec3::new(0.0, 10.0, 0.0));
        let w2 = Wrench::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0), FrameId::Gripper);
        assert_eq!(torque_about(&w2, &Vec3::zeros()), w2.torque);
        let w3 = Wrench::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0), FrameId::Gripper);
        assert_eq!(torque_about(&w3, &Vec3::new(7.0, -3.0, 2.0)), Vec3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn resultant_of_zero_is_zero() {
        let arms = LeverArms::default();
        let r = resultant_torque(
            &Wrench::zero(FrameId::LeftSensor),
            &Wrench::zero(FrameId::RightSensor),
            &arms,
        )
        .unwrap();
        assert_eq!(r, Vec3::zeros());
    }

    #[test]
    fn single_sensor_resultant_matches_torque_about() {
        let arms = LeverArms::default();
        let map = SensorAxisMap::default();
        let l = Wrench::new(
            Vec3::new(0.5, -1.0, 2.0),
            Vec3::new(3.0, 0.0, -1.0),
            FrameId::LeftSensor,
        );
        let r = resultant_torque(&l, &Wrench::zero(FrameId::RightSensor), &arms).unwrap();
        assert_abs_diff_eq!(r, torque_about(&map.to_gripper(&l), &arms.left), epsilon = 1e-12);
    }

    fn bottom_slab() -> PrismBody {
        let c = Contour::rectangle(ContourId(0), Vec2::zeros(), 40.0, 40.0).unwrap();
        PrismBody::new(c, -20.0, 0.0)
    }

    #[test]
    fn contact_point_from_downward_force() {
        let c = estimate_contact_point(&Vec3::new(0.0, 0.0, -1.0), &Vec3::new(0.0, 10.0, 0.0), &bottom_slab()).unwrap();
        assert_abs_diff_eq!(c, Vec3::new(10.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn zero_moment_hits_face_centre() {
        // force along -x through the origin enters the +x face at its centre
        let body = bottom_slab();
        let c = estimate_contact_point(&Vec3::new(-2.0, 0.0, 0.0), &Vec3::new(0.0, 0.0, 0.0), &body);
        // the line runs at z = 0, the top rim; move the body so the line is mid-face
        assert!(c.is_ok());
        let centred = PrismBody::new(body.contour.clone(), -10.0, 10.0);
        let c = estimate_contact_point(&Vec3::new(-2.0, 0.0, 0.0), &Vec3::zeros(), &centred).unwrap();
        assert_abs_diff_eq!(c, Vec3::new(20.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn weak_force_is_no_contact() {
        assert!(matches!(
            estimate_contact_point(&Vec3::new(0.01, 0.0, 0.0), &Vec3::zeros(), &bottom_slab()),
            Err(TactileError::NoContact(_))
        ));
    }

    #[test]
    fn far_line_is_inconsistent() {
        // line of action parallel to z at x = 100 misses the 40 mm block
        let err = estimate_contact_point(&Vec3::new(0.0, 0.0, -1.0), &Vec3::new(0.0, 100.0, 0.0), &bottom_slab());
        assert!(matches!(err, Err(TactileError::InconsistentMeasurement(_))));
    }

    #[test]
    fn near_miss_snaps_to_surface() {
        let c = estimate_contact_point(&Vec3::new(0.0, 0.0, -1.0), &Vec3::new(0.0, 20.5, 0.0), &bottom_slab()).unwrap();
        assert_abs_diff_eq!(c.x, 20.0, epsilon = 1e-6);
    }

    #[test]
    fn synthesized_readings_invert() {
        let synth = WrenchSynthesizer::default();
        let body = bottom_slab();
        let point = Vec3::new(20.0, 5.0, -12.0);
        let force = Vec3::new(-2.0, 0.0, 0.0);
        let (l, r) = synth.synthesize(&force, &point);
        let f = net_force(&l, &r).unwrap();
        let m = resultant_torque(&l, &r, &synth.arms).unwrap();
        assert_abs_diff_eq!(f, force, epsilon = 1e-12);
        let c = estimate_contact_point(&f, &m, &body).unwrap();
        assert_abs_diff_eq!(c, point, epsilon = 1e-9);
    }
}
