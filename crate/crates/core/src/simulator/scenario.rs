use super::{noise_stream, NoiseConfig, SimError, WorldState};
use crate::geometry::{penetration_depth, Contour, ContourId, Pose2, Vec2, PENETRATION_TOL};
use crate::rng;
use crate::tactile::{PrismBody, WrenchSynthesizer};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Environment variable naming a directory that replaces the bundled
/// scenarios.
pub const SCENARIO_DIR_ENV: &str = "CONTACT_SLAM_SCENARIO_DIR";

pub const BUNDLED: &[(&str, &str)] = &[
    ("socket_two_pin", include_str!("../../scenarios/socket_two_pin.json")),
    (
        "socket_three_pin",
        include_str!("../../scenarios/socket_three_pin.json"),
    ),
    ("push_block", include_str!("../../scenarios/push_block.json")),
    (
        "push_block_clear",
        include_str!("../../scenarios/push_block_clear.json"),
    ),
    (
        "push_block_in_target",
        include_str!("../../scenarios/push_block_in_target.json"),
    ),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    Socket,
    Push,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetFrame {
    #[default]
    Environment,
    World,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolygonSpec {
    #[serde(default)]
    pub id: Option<u32>,
    pub vertices: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraspedSpec {
    pub vertices: Vec<[f64; 2]>,
    pub z_min: f64,
    pub z_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    /// Footprint around the block center.
    pub vertices: Vec<[f64; 2]>,
    pub position: [f64; 2],
}

/// On-disk scenario description. Lengths in mm, angles in rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub kind: ScenarioKind,
    pub grasped: GraspedSpec,
    /// Fixed contours in the environment frame.
    #[serde(default)]
    pub obstacles: Vec<PolygonSpec>,
    /// Nominal world position of the environment frame.
    #[serde(default)]
    pub env_offset: [f64; 2],
    /// Uniform jitter applied per seed to `env_offset`, mm.
    #[serde(default)]
    pub start_jitter_mm: f64,
    #[serde(default)]
    pub block: Option<BlockSpec>,
    pub target: PolygonSpec,
    #[serde(default)]
    pub target_frame: TargetFrame,
    pub gripper_pose: [f64; 3],
    /// Prior region: the grasped reference point in the environment frame
    /// for socket tasks, the environment origin in the world for pushing.
    pub prior_region: PolygonSpec,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default = "default_f_probe")]
    pub f_probe: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_f_probe() -> f64 {
    2.0
}

fn default_seed() -> u64 {
    1
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SimError {
    SimError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn polygon(field: &str, id: ContourId, vertices: &[[f64; 2]]) -> Result<Contour, SimError> {
    let pts = vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect();
    Contour::new(id, pts).map_err(|e| invalid(field, e.to_string()))
}

/// Contour id of the grasped object.
pub const GRASPED_ID: ContourId = ContourId(100);
/// Contour id of the movable block.
pub const BLOCK_ID: ContourId = ContourId(200);
pub const TARGET_ID: ContourId = ContourId(300);
pub const PRIOR_ID: ContourId = ContourId(301);

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    /// Resolves `name` as a file path, then in the scenario directory
    /// override, then among the bundled scenarios.
    pub fn resolve(name: &str) -> Result<Self, SimError> {
        let path = Path::new(name);
        if path.is_file() {
            return Self::load(path);
        }
        let stem = name.trim_end_matches(".json");
        if let Ok(dir) = std::env::var(SCENARIO_DIR_ENV) {
            let p = Path::new(&dir).join(format!("{stem}.json"));
            if p.is_file() {
                return Self::load(&p);
            }
        }
        BUNDLED
            .iter()
            .find(|(n, _)| *n == stem)
            .map(|(_, text)| Self::from_json(text))
            .unwrap_or_else(|| Err(SimError::UnknownScenario(name.to_string())))
    }

    /// Builds the world for `seed`, with noise scaled by `noise_scale`.
    pub fn build(&self, seed: Option<u64>, noise_scale: f64) -> Result<WorldState, SimError> {
        let seed = seed.unwrap_or(self.seed);
        if !(noise_scale.is_finite() && noise_scale >= 0.0) {
            return Err(invalid("noise_scale", "must be finite and non-negative"));
        }
        self.noise.validate()?;
        if !(self.f_probe.is_finite() && self.f_probe > 0.0) {
            return Err(invalid("f_probe", "must be positive"));
        }
        if !(self.start_jitter_mm.is_finite() && self.start_jitter_mm >= 0.0) {
            return Err(invalid("start_jitter_mm", "must be non-negative"));
        }
        let g = &self.grasped;
        if g.z_max.partial_cmp(&g.z_min) != Some(std::cmp::Ordering::Greater) {
            return Err(invalid("grasped.z_max", "must exceed z_min"));
        }
        let grasped = polygon("grasped.vertices", GRASPED_ID, &g.vertices)?;
        let mut env = Vec::with_capacity(self.obstacles.len());
        for (i, o) in self.obstacles.iter().enumerate() {
            let id = ContourId(o.id.unwrap_or(i as u32 + 1));
            if env.iter().any(|c: &Contour| c.id() == id) || [GRASPED_ID, BLOCK_ID].contains(&id) {
                return Err(invalid(
                    format!("obstacles[{i}].id"),
                    format!("duplicate or reserved id {id}"),
                ));
            }
            env.push(polygon(&format!("obstacles[{i}].vertices"), id, &o.vertices)?);
        }
        let target = polygon("target.vertices", TARGET_ID, &self.target.vertices)?;
        let prior = polygon("prior_region.vertices", PRIOR_ID, &self.prior_region.vertices)?;
        let block = match &self.block {
            Some(b) => Some((
                polygon("block.vertices", BLOCK_ID, &b.vertices)?,
                Vec2::new(b.position[0], b.position[1]),
            )),
            None => None,
        };
        if self.kind == ScenarioKind::Push && block.is_none() {
            return Err(invalid("block", "push scenarios need a block"));
        }
        let [x, y, th] = self.gripper_pose;
        if ![x, y, th].iter().all(|v| v.is_finite()) {
            return Err(invalid("gripper_pose", "must be finite"));
        }
        let gripper_pose = Pose2::new(x, y, th);

        let nominal = Vec2::new(self.env_offset[0], self.env_offset[1]);
        let mut world_rng = rng::stream(seed, rng::WORLD);
        let j = self.start_jitter_mm;
        let mut last_err = None;
        for attempt in 0..50 {
            let offset = if j > 0.0 {
                nominal + Vec2::new(world_rng.random_range(-j..=j), world_rng.random_range(-j..=j))
            } else {
                nominal
            };
            let obstacles: Vec<Contour> = env.iter().map(|c| c.translated(offset)).collect();
            let w = WorldState {
                name: self.name.clone(),
                kind: self.kind,
                gripper_pose,
                grasped: PrismBody::new(grasped.clone(), g.z_min, g.z_max),
                obstacles,
                env_offset: offset,
                env_local: env.clone(),
                block: block.clone(),
                target: target.clone(),
                target_frame: self.target_frame,
                prior_region: prior.clone(),
                noise: self.noise.scaled(noise_scale),
                f_probe: self.f_probe,
                synth: WrenchSynthesizer::default(),
                seed,
                noise_rng: noise_stream(seed),
            };
            match check_invariants(&w) {
                Ok(()) => return Ok(w),
                Err(e) if j > 0.0 && attempt < 49 => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_err.unwrap_or_else(|| invalid("env_offset", "no valid placement")))
    }
}

/// No initial interpenetration and the prior covering the truth.
pub fn check_invariants(w: &WorldState) -> Result<(), SimError> {
    let grasped = w.grasped_placed();
    for o in &w.obstacles {
        let d = penetration_depth(&grasped, o);
        if d > PENETRATION_TOL {
            return Err(invalid(
                "gripper_pose",
                format!("grasped object penetrates obstacle {} by {d:.3} mm", o.id()),
            ));
        }
        if let Some(b) = w.block_placed() {
            let d = penetration_depth(&b, o);
            if d > PENETRATION_TOL {
                return Err(invalid(
                    "block.position",
                    format!("block penetrates obstacle {} by {d:.3} mm", o.id()),
                ));
            }
        }
    }
    if let Some(b) = w.block_placed() {
        let d = penetration_depth(&grasped, &b);
        if d > PENETRATION_TOL {
            return Err(invalid(
                "block.position",
                format!("block penetrates the grasped object by {d:.3} mm"),
            ));
        }
    }
    let truth = match w.kind {
        ScenarioKind::Socket => Some(w.reference_point()),
        // an obstacle-free workspace has nothing to localize
        ScenarioKind::Push => (!w.obstacles.is_empty()).then_some(w.env_offset),
    };
    if let Some(truth) = truth.filter(|t| !w.prior_region.contains(t)) {
        return Err(invalid(
            "prior_region",
            format!("does not contain the true reference ({:.1}, {:.1})", truth.x, truth.y),
        ));
    }
    Ok(())
}
