//! Browser bindings: socket exploration, contact-point estimation from a
//! synthesized wrench, and block pushing, each returning JSON for the
//! static page in `www/`.

use contact_slam::cli::{self, CliError, RunConfig};
use contact_slam::geometry::{Contour, Vec2};
use contact_slam::simulator::{Scenario, ScenarioKind, SimError, WorldState};
use contact_slam::tactile::estimate_contact_point;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Run(#[from] CliError),
    #[error(transparent)]
    Scenario(#[from] SimError),
    #[error("{0}")]
    Input(String),
    #[error("contact point: {0}")]
    Estimate(String),
}

type Polygon = Vec<[f64; 2]>;

fn polygon(c: &Contour) -> Polygon {
    c.vertices().iter().map(|v| [v.x, v.y]).collect()
}

fn point(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn config(scenario: &str, seed: u64, noise_scale: f64) -> RunConfig {
    RunConfig {
        scenario: scenario.into(),
        seed,
        noise_scale,
        ..RunConfig::default()
    }
}

fn world(scenario: &str, seed: u64, noise_scale: f64, kind: ScenarioKind) -> Result<WorldState, DemoError> {
    let sc = Scenario::resolve(scenario)?;
    if sc.kind != kind {
        return Err(DemoError::Input(format!("`{scenario}` is a {:?} scenario", sc.kind)));
    }
    Ok(sc.build(Some(seed), noise_scale)?)
}

#[derive(Serialize)]
struct SocketScene {
    /// Environment features in their own frame.
    env: Vec<Polygon>,
    prior: Polygon,
    /// Grasped outline around its reference point.
    plug: Polygon,
    goal: [f64; 2],
    /// True reference point in the environment frame before exploring.
    truth: [f64; 2],
    /// Gripper position in the world at the start.
    start: [f64; 2],
}

#[derive(Serialize)]
struct Run<S: Serialize, R: Serialize> {
    scene: S,
    report: R,
}

/// Runs socket exploration on a bundled scenario.
pub fn explore_json(scenario: &str, seed: u64, noise_scale: f64) -> Result<String, DemoError> {
    let w = world(scenario, seed, noise_scale, ScenarioKind::Socket)?;
    let task = w.socket_task();
    let scene = SocketScene {
        env: task.env.iter().map(polygon).collect(),
        prior: polygon(&task.prior_region),
        plug: polygon(&task.obj),
        goal: point(task.goal),
        truth: point(w.reference_point()),
        start: point(w.gripper_pose.translation()),
    };
    let report = cli::explore(&config(scenario, seed, noise_scale))?;
    Ok(serde_json::to_string(&Run { scene, report }).expect("report serializes"))
}

#[derive(Serialize)]
struct ContactEstimate {
    plug: Polygon,
    z_range: [f64; 2],
    applied: [f64; 3],
    estimate: [f64; 3],
    error_mm: f64,
}

/// Presses on the grasped object at `(x, y)` in its own frame with planar
/// force `(fx, fy)` and recovers the contact point from the noisy wrench.
pub fn contact_point_json(
    scenario: &str,
    seed: u64,
    noise_scale: f64,
    x: f64,
    y: f64,
    fx: f64,
    fy: f64,
) -> Result<String, DemoError> {
    let sc = Scenario::resolve(scenario)?;
    let mut w = sc.build(Some(seed), noise_scale)?;
    let pose = w.gripper_pose;
    let reading = w.synthesize_reading(
        &pose.rotate(&Vec2::new(fx, fy)),
        &pose.transform_point(&Vec2::new(x, y)),
    );
    let f = reading.net_force().map_err(|e| DemoError::Estimate(e.to_string()))?;
    let m = reading
        .resultant_torque(&w.synth.arms)
        .map_err(|e| DemoError::Estimate(e.to_string()))?;
    let est = estimate_contact_point(&f, &m, &w.grasped).map_err(|e| DemoError::Estimate(e.to_string()))?;
    let body = &w.grasped;
    let z = 0.5 * (body.z_min + body.z_max);
    let applied = [x, y, z];
    let error_mm = ((est.x - x).powi(2) + (est.y - y).powi(2) + (est.z - z).powi(2)).sqrt();
    let out = ContactEstimate {
        plug: polygon(&body.contour),
        z_range: [body.z_min, body.z_max],
        applied,
        estimate: [est.x, est.y, est.z],
        error_mm,
    };
    Ok(serde_json::to_string(&out).expect("estimate serializes"))
}

#[derive(Serialize)]
struct PushScene {
    obstacles: Vec<Polygon>,
    block: Polygon,
    target: Polygon,
    tool: Polygon,
}

/// Runs obstacle exploration and pushing on a bundled scenario.
pub fn push_json(scenario: &str, seed: u64, noise_scale: f64) -> Result<String, DemoError> {
    let w = world(scenario, seed, noise_scale, ScenarioKind::Push)?;
    let block = w
        .block_placed()
        .ok_or_else(|| DemoError::Input(format!("`{scenario}` has no block")))?;
    let scene = PushScene {
        obstacles: w.obstacles.iter().map(polygon).collect(),
        block: polygon(&block),
        target: polygon(&w.target_world()),
        tool: polygon(&w.grasped_placed()),
    };
    let report = cli::push(&config(scenario, seed, noise_scale))?;
    Ok(serde_json::to_string(&Run { scene, report }).expect("report serializes"))
}

fn js(r: Result<String, DemoError>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn explore(scenario: &str, seed: u32, noise_scale: f64) -> Result<String, JsError> {
    js(explore_json(scenario, seed.into(), noise_scale))
}

#[wasm_bindgen(js_name = contactPoint)]
pub fn contact_point(
    scenario: &str,
    seed: u32,
    noise_scale: f64,
    x: f64,
    y: f64,
    fx: f64,
    fy: f64,
) -> Result<String, JsError> {
    js(contact_point_json(scenario, seed.into(), noise_scale, x, y, fx, fy))
}

#[wasm_bindgen]
pub fn push(scenario: &str, seed: u32, noise_scale: f64) -> Result<String, JsError> {
    js(push_json(scenario, seed.into(), noise_scale))
}
