//! Quasi-static planar ground-truth world: executes moves and pushes,
//! detects first contact, and synthesizes noisy tactile readings.

mod calibration;
mod scenario;

pub use calibration::synthetic_calibration;
pub use scenario::{
    check_invariants, BlockSpec, GraspedSpec, PolygonSpec, Scenario, ScenarioKind, TargetFrame, BLOCK_ID, BUNDLED,
    GRASPED_ID, PRIOR_ID, SCENARIO_DIR_ENV, TARGET_ID,
};

use crate::exploration::{
    Action, AlignmentProbe, MoveOutcome, ProbeWorld, PushOutcome, PushTask, PushWorld, SocketTask,
};
use crate::geometry::{penetration_depth, sweep_first_contact, Contour, ContourId, Pose2, Vec2, PENETRATION_TOL};
use crate::rng::{self, StreamRng};
use crate::tactile::{MarkerField, PrismBody, SensorReading, Vec3, Wrench, WrenchSynthesizer};
use nalgebra::Rotation3;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Farthest the tool travels to reach the block at the start of a push, mm.
pub const PUSH_APPROACH_MAX: f64 = 10.0;
/// Sliding resistance felt by the tool during a free push, N.
pub const PUSH_FRICTION: f64 = 0.5;
/// Goal distance under which an insertion attempt meets no lateral
/// resistance, mm.
pub const HOLE_CLEARANCE: f64 = 1.0;
/// Pad rotation per unit torque about the gripper z axis, rad/(N·mm).
pub const MARKER_COMPLIANCE: f64 = 2e-5;
const MARKER_GRID: usize = 5;
const MARKER_PITCH: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("scenario parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("unknown subject `{0}`")]
    UnknownSubject(String),
}

/// Gaussian noise levels of the simulated sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Per-component force noise, N.
    pub force: f64,
    /// Per-component torque noise, N·mm.
    pub torque: f64,
    /// Marker position noise, mm.
    pub marker: f64,
    /// Reported travel noise, mm.
    pub distance: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            force: 0.02,
            torque: 0.2,
            marker: 0.01,
            distance: 0.2,
        }
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        Self {
            force: 0.0,
            torque: 0.0,
            marker: 0.0,
            distance: 0.0,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            force: self.force * k,
            torque: self.torque * k,
            marker: self.marker * k,
            distance: self.distance * k,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("force", self.force),
            ("torque", self.torque),
            ("marker", self.marker),
            ("distance", self.distance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(SimError::Invalid {
                    field: format!("noise.{name}"),
                    reason: "must be finite and non-negative".into(),
                });
            }
        }
        Ok(())
    }
}

/// Whose reference point an estimate is scored against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subject {
    /// Grasped reference point, environment frame.
    Grasped,
    /// Block center, world frame.
    Block,
    /// Environment origin holding the given obstacle, world frame.
    Obstacle(ContourId),
}

fn gauss(rng: &mut StreamRng, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sigma
}

/// Complete simulated world. Obstacles never move; the gripper (holding
/// the grasped object) and the block do.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub name: String,
    pub kind: ScenarioKind,
    pub gripper_pose: Pose2,
    /// Grasped object in the gripper frame.
    pub grasped: PrismBody,
    /// Obstacles at their true world placement.
    pub obstacles: Vec<Contour>,
    /// True world position of the environment frame.
    pub env_offset: Vec2,
    /// Obstacles in the environment frame, as known to the planner.
    pub env_local: Vec<Contour>,
    /// Block footprint around its center, and the center.
    pub block: Option<(Contour, Vec2)>,
    pub target: Contour,
    pub target_frame: TargetFrame,
    pub prior_region: Contour,
    pub noise: NoiseConfig,
    pub f_probe: f64,
    pub synth: WrenchSynthesizer,
    pub seed: u64,
    noise_rng: StreamRng,
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.gripper_pose == other.gripper_pose
            && self.obstacles == other.obstacles
            && self.block == other.block
            && self.env_offset == other.env_offset
            && self.noise_rng == other.noise_rng
    }
}

impl WorldState {
    pub fn grasped_placed(&self) -> Contour {
        self.grasped.contour.transformed(&self.gripper_pose)
    }

    pub fn block_placed(&self) -> Option<Contour> {
        self.block.as_ref().map(|(c, p)| c.translated(*p))
    }

    /// Grasped reference point in the environment frame.
    pub fn reference_point(&self) -> Vec2 {
        self.gripper_pose.translation() - self.env_offset
    }

    pub fn target_world(&self) -> Contour {
        match self.target_frame {
            TargetFrame::Environment => self.target.translated(self.env_offset),
            TargetFrame::World => self.target.clone(),
        }
    }

    pub fn target_env(&self) -> Contour {
        match self.target_frame {
            TargetFrame::Environment => self.target.clone(),
            TargetFrame::World => self.target.translated(-self.env_offset),
        }
    }

    /// Grasped footprint at the gripper orientation, around `O_e`.
    fn grasped_oriented(&self) -> Contour {
        self.grasped
            .contour
            .transformed(&Pose2::new(0.0, 0.0, self.gripper_pose.theta))
    }

    pub fn socket_task(&self) -> SocketTask {
        SocketTask {
            name: self.name.clone(),
            env: self.env_local.clone(),
            obj: self.grasped_oriented(),
            body: self.grasped.clone(),
            arms: self.synth.arms,
            goal: self.target_env().centroid(),
            prior_region: self.prior_region.clone(),
            actions: Action::compass(),
        }
    }

    pub fn push_task(&self) -> PushTask {
        let (block, start) = self.block.clone().unwrap_or_else(|| {
            (
                Contour::rectangle(BLOCK_ID, Vec2::zeros(), 1.0, 1.0).expect("unit square"),
                Vec2::zeros(),
            )
        });
        PushTask {
            name: self.name.clone(),
            tool: self.grasped_oriented(),
            block,
            block_start: start,
            target: self.target_world(),
            obstacle: self.env_local.clone(),
            prior_region: (!self.env_local.is_empty()).then(|| self.prior_region.clone()),
            actions: Action::compass(),
        }
    }

    pub fn ground_truth_error(&self, estimate: &Vec2, subject: Subject) -> Result<f64, SimError> {
        let truth = match subject {
            Subject::Grasped => self.reference_point(),
            Subject::Block => self
                .block
                .as_ref()
                .map(|(_, p)| *p)
                .ok_or_else(|| SimError::UnknownSubject("block".into()))?,
            Subject::Obstacle(id) => {
                if !self.obstacles.iter().any(|o| o.id() == id) {
                    return Err(SimError::UnknownSubject(format!("obstacle {id}")));
                }
                self.env_offset
            }
        };
        Ok((estimate - truth).norm())
    }

    /// Readings produced by planar `force` (world frame, on the grasped
    /// object) acting at world `point`.
    pub fn synthesize_reading(&mut self, force: &Vec2, point: &Vec2) -> SensorReading {
        let inv = self.gripper_pose.inverse();
        let f2 = inv.rotate(force);
        let p2 = inv.transform_point(point);
        let z = 0.5 * (self.grasped.z_min + self.grasped.z_max);
        let f = Vec3::new(f2.x, f2.y, 0.0);
        let p = Vec3::new(p2.x, p2.y, z);
        let (left, right) = self.synth.synthesize(&f, &p);
        let moment_z = p.cross(&f).z;
        let left = self.noisy(left);
        let right = self.noisy(right);
        let markers = self.markers(moment_z);
        SensorReading { left, right, markers }
    }

    fn idle_reading(&mut self) -> SensorReading {
        let origin = self.gripper_pose.translation();
        self.synthesize_reading(&Vec2::zeros(), &origin)
    }

    fn noisy(&mut self, w: Wrench) -> Wrench {
        let (sf, st) = (self.noise.force, self.noise.torque);
        let rng = &mut self.noise_rng;
        let df = Vec3::new(gauss(rng, sf), gauss(rng, sf), gauss(rng, sf));
        let dt = Vec3::new(gauss(rng, st), gauss(rng, st), gauss(rng, st));
        Wrench::new(w.force + df, w.torque + dt, w.frame)
    }

    fn markers(&mut self, moment_z: f64) -> MarkerField {
        let rest = MarkerField::grid(MARKER_GRID, MARKER_PITCH);
        let rot = Rotation3::from_axis_angle(&Vec3::z_axis(), MARKER_COMPLIANCE * moment_z);
        let sm = self.noise.marker;
        let displaced = rest
            .iter()
            .map(|p| {
                let rng = &mut self.noise_rng;
                rot * p + Vec3::new(gauss(rng, sm), gauss(rng, sm), gauss(rng, sm))
            })
            .collect();
        MarkerField::new(rest, displaced).expect("grid has enough markers")
    }

    fn report_distance(&mut self, d: f64) -> f64 {
        let jitter = gauss(&mut self.noise_rng, self.noise.distance);
        (d + jitter).max(0.0)
    }

    fn statics(&self) -> Vec<Contour> {
        let mut s = self.obstacles.clone();
        s.extend(self.block_placed());
        s
    }

    /// Translates the gripper along unit `direction` until the grasped
    /// object touches something or `max_dist` is covered.
    pub fn execute_move(&mut self, direction: &Vec2, max_dist: f64) -> MoveOutcome {
        let moving = self.grasped_placed();
        let hit = match sweep_first_contact(&moving, direction, max_dist, &self.statics()) {
            Ok(h) => h,
            Err(e) => {
                log::warn!("move refused: {e}");
                let reading = self.idle_reading();
                return MoveOutcome {
                    traveled: 0.0,
                    contact: false,
                    reading,
                };
            }
        };
        let traveled = hit.map_or(max_dist, |h| h.distance);
        self.gripper_pose = Pose2::new(
            self.gripper_pose.x + direction.x * traveled,
            self.gripper_pose.y + direction.y * traveled,
            self.gripper_pose.theta,
        );
        let reading = match hit {
            Some(h) => self.synthesize_reading(&(h.normal * self.f_probe), &h.contact_point),
            None => self.idle_reading(),
        };
        MoveOutcome {
            traveled: self.report_distance(traveled),
            contact: hit.is_some(),
            reading,
        }
    }

    /// Tool approaches the block along `direction` and carries it up to
    /// `max_dist`, stopping where the block or tool meets an obstacle.
    pub fn execute_push(&mut self, direction: &Vec2, max_dist: f64) -> PushOutcome {
        let mut events = Vec::new();
        let Some((block_local, block_pos)) = self.block.clone() else {
            log::warn!("push requested in a world without a block");
            events.push("no block".to_string());
            return self.push_noop(events);
        };
        let tool = self.grasped_placed();
        let approach = match sweep_first_contact(&tool, direction, PUSH_APPROACH_MAX, &self.statics()) {
            Ok(Some(h)) if h.pair.env_edge.contour == BLOCK_ID => h,
            _ => {
                log::warn!(
                    "tool cannot reach the block along ({:.3}, {:.3})",
                    direction.x,
                    direction.y
                );
                events.push("tool cannot reach the block".to_string());
                return self.push_noop(events);
            }
        };
        events.push(format!("tool-block {}", approach.pair));
        let tool = tool.translated(direction * approach.distance);
        let block = block_local.translated(block_pos);
        let block_hit = sweep_first_contact(&block, direction, max_dist, &self.obstacles)
            .ok()
            .flatten();
        let tool_hit = sweep_first_contact(&tool, direction, max_dist, &self.obstacles)
            .ok()
            .flatten();
        let mut travel = max_dist;
        let mut stop: Option<(Vec2, Vec2)> = None;
        if let Some(h) = block_hit {
            travel = h.distance;
            stop = Some((h.normal, approach.contact_point));
            events.push(format!("block-obstacle {}", h.pair));
        }
        if let Some(h) = tool_hit {
            if h.distance < travel {
                travel = h.distance;
                stop = Some((h.normal, h.contact_point));
                events.push(format!("tool-obstacle {}", h.pair));
            }
        }
        let shift = direction * (approach.distance + travel);
        self.gripper_pose = Pose2::new(
            self.gripper_pose.x + shift.x,
            self.gripper_pose.y + shift.y,
            self.gripper_pose.theta,
        );
        self.block = Some((block_local, block_pos + direction * travel));
        let reading = match stop {
            Some((normal, point)) => self.synthesize_reading(&(normal * self.f_probe), &(point + direction * travel)),
            None => self.synthesize_reading(
                &(-direction * PUSH_FRICTION),
                &(approach.contact_point + direction * travel),
            ),
        };
        let block_traveled = self.report_distance(travel);
        PushOutcome {
            tool_traveled: approach.distance + block_traveled,
            block_traveled,
            blocked: stop.is_some(),
            reading,
            events,
        }
    }

    fn push_noop(&mut self, events: Vec<String>) -> PushOutcome {
        let reading = self.idle_reading();
        PushOutcome {
            tool_traveled: 0.0,
            block_traveled: 0.0,
            blocked: false,
            reading,
            events,
        }
    }

    /// Insertion attempt at the current pose: the goal distance and the
    /// lateral reaction of the socket face.
    pub fn probe_alignment(&mut self) -> AlignmentProbe {
        let err = self.reference_point() - self.target_env().centroid();
        let distance = err.norm();
        let lateral = if distance < HOLE_CLEARANCE {
            Vec2::zeros()
        } else {
            -err / distance * self.f_probe
        };
        let sf = self.noise.force;
        let rng = &mut self.noise_rng;
        let net_force = Vec3::new(
            lateral.x + gauss(rng, sf),
            lateral.y + gauss(rng, sf),
            -self.f_probe + gauss(rng, sf),
        );
        AlignmentProbe { net_force, distance }
    }

    /// Lifts the grasped tool and sets it down at `position`.
    pub fn place_tool(&mut self, position: &Vec2) -> Result<(), String> {
        let pose = Pose2::new(position.x, position.y, self.gripper_pose.theta);
        let placed = self.grasped.contour.transformed(&pose);
        for s in self.statics() {
            let d = penetration_depth(&placed, &s);
            if d > PENETRATION_TOL {
                return Err(format!("placement overlaps contour {} by {d:.3} mm", s.id()));
            }
        }
        self.gripper_pose = pose;
        Ok(())
    }
}

impl ProbeWorld for WorldState {
    fn gripper_pose(&self) -> Pose2 {
        self.gripper_pose
    }

    fn execute_move(&mut self, direction: &Vec2, max_dist: f64) -> MoveOutcome {
        WorldState::execute_move(self, direction, max_dist)
    }

    fn probe_alignment(&mut self) -> AlignmentProbe {
        WorldState::probe_alignment(self)
    }

    fn reference_truth(&self) -> Option<Vec2> {
        Some(self.reference_point())
    }
}

impl PushWorld for WorldState {
    fn tool_position(&self) -> Vec2 {
        self.gripper_pose.translation()
    }

    fn place_tool(&mut self, position: &Vec2) -> Result<(), String> {
        WorldState::place_tool(self, position)
    }

    fn execute_move(&mut self, direction: &Vec2, max_dist: f64) -> MoveOutcome {
        WorldState::execute_move(self, direction, max_dist)
    }

    fn execute_push(&mut self, direction: &Vec2, max_dist: f64) -> PushOutcome {
        WorldState::execute_push(self, direction, max_dist)
    }

    fn block_truth(&self) -> Option<Vec2> {
        self.block.as_ref().map(|(_, p)| *p)
    }

    fn obstacle_truth(&self) -> Option<Vec2> {
        (!self.obstacles.is_empty()).then_some(self.env_offset)
    }
}

/// Fresh noise stream for `seed`.
pub(crate) fn noise_stream(seed: u64) -> StreamRng {
    rng::stream(seed, rng::NOISE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tactile::estimate_contact_point;

    fn world(name: &str, seed: u64) -> WorldState {
        Scenario::resolve(name).unwrap().build(Some(seed), 0.0).unwrap()
    }

    #[test]
    fn bundled_scenarios_build() {
        for (name, _) in BUNDLED {
            let w = world(name, 3);
            check_invariants(&w).unwrap();
        }
    }

    #[test]
    fn malformed_json_reports_location() {
        let err = Scenario::from_json("{\n  \"name\": \"x\",\n  oops\n}").unwrap_err();
        match err {
            SimError::Parse { location, .. } => assert!(location.contains("line 3"), "{location}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(BUNDLED[0].1).unwrap();
        v["surprise"] = serde_json::json!(1);
        assert!(matches!(
            Scenario::from_json(&v.to_string()),
            Err(SimError::Parse { .. })
        ));
    }

    #[test]
    fn unknown_scenario() {
        assert!(matches!(
            Scenario::resolve("no_such_world"),
            Err(SimError::UnknownScenario(_))
        ));
    }

    #[test]
    fn initial_overlap_rejected() {
        let mut s = Scenario::resolve("socket_two_pin").unwrap();
        s.start_jitter_mm = 0.0;
        // gripper inside the left wall
        s.gripper_pose = [s.env_offset[0] - 75.0, s.env_offset[1], 0.0];
        let err = s.build(Some(1), 1.0).unwrap_err();
        assert!(
            matches!(err, SimError::Invalid { ref field, .. } if field == "gripper_pose"),
            "{err}"
        );
    }

    #[test]
    fn negative_noise_rejected() {
        let mut s = Scenario::resolve("socket_two_pin").unwrap();
        s.noise.force = -1.0;
        assert!(matches!(s.build(None, 1.0), Err(SimError::Invalid { .. })));
        assert!(matches!(
            Scenario::resolve("socket_two_pin").unwrap().build(None, f64::NAN),
            Err(SimError::Invalid { .. })
        ));
    }

    #[test]
    fn noiseless_move_round_trip() {
        let mut w = world("socket_two_pin", 1);
        let start = w.gripper_pose.translation();
        let dir = Vec2::new(1.0, 0.0);
        let expected = sweep_first_contact(&w.grasped_placed(), &dir, 200.0, &w.obstacles)
            .unwrap()
            .unwrap();
        let out = w.execute_move(&dir, 200.0);
        assert!(out.contact);
        assert!((out.traveled - expected.distance).abs() < 1e-6);
        assert!((w.gripper_pose.translation() - (start + dir * expected.distance)).norm() < 1e-6);
        let f = out.reading.net_force().unwrap();
        let applied = expected.normal * w.f_probe;
        assert!((Vec2::new(f.x, f.y) - applied).norm() < 1e-6, "{f:?} vs {applied:?}");
        let m = out.reading.resultant_torque(&w.synth.arms).unwrap();
        let c = estimate_contact_point(&f, &m, &w.grasped).unwrap();
        let local = w.gripper_pose.inverse().transform_point(&expected.contact_point);
        assert!((Vec2::new(c.x, c.y) - local).norm() < 1e-6, "{c:?} vs {local:?}");
    }

    #[test]
    fn free_move_reports_no_contact() {
        let mut w = world("socket_two_pin", 1);
        let out = w.execute_move(&Vec2::new(0.0, 1.0), 1.0);
        assert!(!out.contact);
        assert!((out.traveled - 1.0).abs() < 1e-12);
        assert!(out.reading.net_force().unwrap().norm() < 1e-9);
    }

    #[test]
    fn free_push_carries_the_block() {
        let mut w = world("push_block_clear", 1);
        let out = w.execute_push(&Vec2::new(1.0, 0.0), 30.0);
        assert!(!out.blocked);
        assert!((out.block_traveled - 30.0).abs() < 1e-9);
        let (_, p) = w.block.clone().unwrap();
        assert!((p - Vec2::new(30.0, 0.0)).norm() < 1e-9);
        // friction opposes the motion
        assert!(out.reading.net_force().unwrap().x < 0.0);
    }

    #[test]
    fn push_stops_at_the_obstacle() {
        let mut w = world("push_block", 2);
        let face = w.obstacles[0].bounds().0.x;
        let out = w.execute_push(&Vec2::new(1.0, 0.0), 300.0);
        assert!(out.blocked);
        let (_, p) = w.block.clone().unwrap();
        assert!(
            (p.x + 15.0 - face).abs() < 1e-9,
            "block edge {} vs face {face}",
            p.x + 15.0
        );
        assert!(out.events.iter().any(|e| e.starts_with("block-obstacle")));
    }

    #[test]
    fn pushing_away_from_the_tool_is_a_no_op() {
        let mut w = world("push_block_clear", 1);
        let before = w.clone();
        let out = w.execute_push(&Vec2::new(-1.0, 0.0), 30.0);
        assert_eq!(out.block_traveled, 0.0);
        assert!(!out.blocked);
        assert_eq!(w.block, before.block);
        assert_eq!(w.gripper_pose, before.gripper_pose);
    }

    #[test]
    fn place_tool_rejects_overlap() {
        let mut w = world("push_block_clear", 1);
        assert!(w.place_tool(&Vec2::new(0.0, 0.0)).is_err());
        w.place_tool(&Vec2::new(0.0, -40.0)).unwrap();
        assert_eq!(w.gripper_pose.translation(), Vec2::new(0.0, -40.0));
    }

    #[test]
    fn ground_truth_error_per_subject() {
        let w = world("push_block", 4);
        let truth = w.env_offset;
        let e = w
            .ground_truth_error(&(truth + Vec2::new(3.0, 4.0)), Subject::Obstacle(ContourId(1)))
            .unwrap();
        assert!((e - 5.0).abs() < 1e-12);
        assert_eq!(w.ground_truth_error(&Vec2::zeros(), Subject::Block).unwrap(), 0.0);
        assert!(w
            .ground_truth_error(&Vec2::zeros(), Subject::Obstacle(ContourId(77)))
            .is_err());
        let s = world("socket_two_pin", 4);
        let r = s.reference_point();
        assert_eq!(s.ground_truth_error(&r, Subject::Grasped).unwrap(), 0.0);
        assert!(s.ground_truth_error(&r, Subject::Block).is_err());
    }

    #[test]
    fn same_seed_same_world() {
        let s = Scenario::resolve("socket_three_pin").unwrap();
        let mut a = s.build(Some(9), 1.0).unwrap();
        let mut b = s.build(Some(9), 1.0).unwrap();
        assert_eq!(a, b);
        for dir in [Vec2::new(1.0, 0.0), Vec2::new(0.0, -1.0)] {
            let (oa, ob) = (a.execute_move(&dir, 60.0), b.execute_move(&dir, 60.0));
            assert_eq!(oa.traveled, ob.traveled);
            assert_eq!(oa.reading, ob.reading);
        }
        let c = s.build(Some(10), 1.0).unwrap();
        assert_ne!(a.env_offset, c.env_offset);
    }

    #[test]
    fn alignment_probe_reports_lateral_reaction() {
        let mut w = world("socket_two_pin", 1);
        let far = w.probe_alignment();
        assert!(far.distance > HOLE_CLEARANCE);
        assert!((Vec2::new(far.net_force.x, far.net_force.y).norm() - w.f_probe).abs() < 1e-9);
        let goal = w.target_world().centroid();
        w.gripper_pose = Pose2::new(goal.x, goal.y, 0.0);
        let near = w.probe_alignment();
        assert!(near.distance < 1e-9);
        assert!(Vec2::new(near.net_force.x, near.net_force.y).norm() < 1e-12);
    }

    #[test]
    fn calibration_samples_are_reproducible() {
        let w = world("socket_two_pin", 1);
        let a = synthetic_calibration(20, &w.grasped, &w.synth, &NoiseConfig::default(), 5);
        let b = synthetic_calibration(20, &w.grasped, &w.synth, &NoiseConfig::default(), 5);
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
    }
}
