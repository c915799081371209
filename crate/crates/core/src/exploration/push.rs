use super::policy::{belief_converged, belief_step, MoveOutcome, PolicyConfig, StepRecord};
use super::{
    belief_support, detect_peaks, evaluate_information_gain, init_particles_with, prune_no_contact, support_diameter,
    weighted_mean, Action, ContactModel, ParticleSet,
};
use crate::geometry::{penetration_depth, sweep_first_contact, Contour, Vec2, PENETRATION_TOL};
use crate::rng;
use crate::tactile::SensorReading;
use serde::{Deserialize, Serialize};

/// Clearance kept between planned block paths and the estimated obstacle, mm.
const ROUTE_MARGIN: f64 = 4.0;
/// Gap between the tool and the block when the tool is set down, mm.
const APPROACH_GAP: f64 = 2.0;
/// Clearance between the probe start and the farthest hypothesis, mm.
const PROBE_MARGIN: f64 = 3.0;
const MAX_REPLANS: usize = 10;
const MAX_FAILED_PROBES: usize = 3;
/// Shrinkage allowed when moving a block off an obstacle it rests on, to
/// absorb estimation error at the contact, mm.
const CONTACT_SLACK: f64 = 1.0;

/// Prior knowledge for a block-pushing task. Positions are world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PushTask {
    pub name: String,
    /// Footprint of the pushing tool around its reference point.
    pub tool: Contour,
    /// Footprint of the block around its center.
    pub block: Contour,
    pub block_start: Vec2,
    pub target: Contour,
    /// Obstacle footprint around its reference point; empty when the
    /// workspace is believed clear.
    pub obstacle: Vec<Contour>,
    /// Where the obstacle reference point may lie.
    pub prior_region: Option<Contour>,
    pub actions: Vec<Action>,
}

/// Result of one push.
#[derive(Debug, Clone, PartialEq)]
pub struct PushOutcome {
    pub tool_traveled: f64,
    pub block_traveled: f64,
    /// Motion ended early because the block met an obstacle.
    pub blocked: bool,
    pub reading: SensorReading,
    pub events: Vec<String>,
}

pub trait PushWorld {
    fn tool_position(&self) -> Vec2;
    /// Lifts the tool clear of the scene and sets it down at `position`.
    fn place_tool(&mut self, position: &Vec2) -> Result<(), String>;
    /// Free tool translation until contact or `max_dist`.
    fn execute_move(&mut self, direction: &Vec2, max_dist: f64) -> MoveOutcome;
    /// Tool approaches the block and pushes it up to `max_dist`.
    fn execute_push(&mut self, direction: &Vec2, max_dist: f64) -> PushOutcome;
    fn block_truth(&self) -> Option<Vec2>;
    fn obstacle_truth(&self) -> Option<Vec2>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushLeg {
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub block_traveled_mm: f64,
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushReport {
    pub scenario: String,
    pub seed: u64,
    pub legs: Vec<PushLeg>,
    /// Tool probing moves spent on the obstacle.
    pub exploration_steps: usize,
    pub steps: Vec<StepRecord>,
    pub replans: usize,
    pub obstacle_estimate: Option<[f64; 2]>,
    pub obstacle_error_mm: Option<f64>,
    pub obstacle_converged: bool,
    pub block_estimate: [f64; 2],
    pub block_final: Option<[f64; 2]>,
    pub block_in_target: bool,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Largest extent of `c` along unit `dir`.
fn extent(c: &Contour, dir: &Vec2) -> f64 {
    c.vertices()
        .iter()
        .map(|v| v.dot(dir))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn radius(c: &Contour) -> f64 {
    c.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Axis-aligned bounds of `c` grown by `m` on every side.
fn inflated(c: &Contour, m: f64) -> Contour {
    let (lo, hi) = c.bounds();
    let center = (lo + hi) / 2.0;
    Contour::rectangle(c.id(), center, hi.x - lo.x + 2.0 * m, hi.y - lo.y + 2.0 * m)
        .expect("bounds of a valid contour have positive size")
}

fn overlaps(a: &Contour, b: &Contour) -> bool {
    let (lo, hi) = a.bounds();
    let (slo, shi) = b.bounds();
    let apart = lo.x > shi.x || lo.y > shi.y || slo.x > hi.x || slo.y > hi.y;
    !apart && penetration_depth(a, b) > PENETRATION_TOL
}

/// Tool reference position behind the block for a push along `dir`.
fn tool_behind(task: &PushTask, block_pos: &Vec2, dir: &Vec2) -> Vec2 {
    let back = extent(&task.block, &-dir);
    let front = extent(&task.tool, dir);
    block_pos - dir * (back + front + APPROACH_GAP)
}

/// Whether pushing the block from `a` to `b` keeps block and tool clear
/// of `obstacles`.
fn leg_clear(task: &PushTask, a: &Vec2, b: &Vec2, obstacles: &[Contour], margin: f64) -> bool {
    let d = b - a;
    let len = d.norm();
    if len < 1e-9 {
        return true;
    }
    let dir = d / len;
    let block = inflated(&task.block, margin).translated(*a);
    let tool = inflated(&task.tool, margin).translated(tool_behind(task, a, &dir));
    for body in [&block, &tool] {
        if obstacles.iter().any(|o| overlaps(body, o)) {
            return false;
        }
        match sweep_first_contact(body, &dir, len, obstacles) {
            Ok(None) => {}
            _ => return false,
        }
    }
    true
}

fn route_length(from: &Vec2, route: &[Vec2]) -> f64 {
    let mut at = *from;
    let mut total = 0.0;
    for p in route {
        total += (p - at).norm();
        at = *p;
    }
    total
}

/// Shortest clear route. A block resting against an obstacle first moves
/// along a compass direction, typically sliding along the obstacle face,
/// until it clears the margin.
fn plan_route(task: &PushTask, from: &Vec2, to: &Vec2, obstacles: &[Contour], margin: f64) -> Option<Vec<Vec2>> {
    let block = inflated(&task.block, margin).translated(*from);
    if !obstacles.iter().any(|o| overlaps(&block, o)) {
        return plan_direct(task, from, to, obstacles, margin);
    }
    let span = |c: &Contour| {
        let (lo, hi) = c.bounds();
        (hi - lo).norm()
    };
    let reach: f64 = obstacles.iter().map(span).sum::<f64>() + span(&task.block);
    let max_steps = (reach + margin).ceil() as usize;
    let mut best: Option<Vec<Vec2>> = None;
    for dir in [Vec2::x(), Vec2::y(), -Vec2::x(), -Vec2::y()] {
        for k in 1..=max_steps {
            let p = from + dir * k as f64;
            if !leg_clear(task, from, &p, obstacles, -CONTACT_SLACK) {
                break;
            }
            let block = inflated(&task.block, margin).translated(p);
            if obstacles.iter().any(|o| overlaps(&block, o)) {
                continue;
            }
            if let Some(rest) = plan_direct(task, &p, to, obstacles, margin) {
                let mut route = vec![p];
                route.extend(rest);
                if best
                    .as_ref()
                    .is_none_or(|b| route_length(from, &route) < route_length(from, b))
                {
                    best = Some(route);
                }
            }
            break;
        }
    }
    best
}

/// Shortest clear polyline among straight, L-shaped and detour routes.
fn plan_direct(task: &PushTask, from: &Vec2, to: &Vec2, obstacles: &[Contour], margin: f64) -> Option<Vec<Vec2>> {
    let mut candidates: Vec<Vec<Vec2>> = vec![
        vec![*to],
        vec![Vec2::new(to.x, from.y), *to],
        vec![Vec2::new(from.x, to.y), *to],
    ];
    if !obstacles.is_empty() {
        let (mut lo, mut hi) = obstacles[0].bounds();
        for o in &obstacles[1..] {
            let (l, h) = o.bounds();
            lo = lo.inf(&l);
            hi = hi.sup(&h);
        }
        let (blo, bhi) = task.block.bounds();
        let pad = 2.0 * margin;
        for y in [hi.y - blo.y + pad, lo.y - bhi.y - pad] {
            candidates.push(vec![Vec2::new(from.x, y), Vec2::new(to.x, y), *to]);
        }
        for x in [hi.x - blo.x + pad, lo.x - bhi.x - pad] {
            candidates.push(vec![Vec2::new(x, from.y), Vec2::new(x, to.y), *to]);
        }
    }
    candidates
        .into_iter()
        .map(|r| {
            let mut pts: Vec<Vec2> = Vec::new();
            let mut at = *from;
            for p in r {
                if (p - at).norm() > 1e-9 {
                    pts.push(p);
                    at = p;
                }
            }
            pts
        })
        .filter(|r| {
            let mut at = *from;
            r.iter().all(|p| {
                let ok = leg_clear(task, &at, p, obstacles, margin);
                at = *p;
                ok
            })
        })
        .min_by(|a, b| route_length(from, a).total_cmp(&route_length(from, b)))
}

struct Probe {
    start: Vec2,
    action: Action,
    model: ContactModel,
    max_dist: f64,
}

/// Picks the tool start and direction with the best information gain
/// over the obstacle hypotheses.
fn choose_probe(task: &PushTask, ps: &ParticleSet, block_pos: &Vec2, cfg: &PolicyConfig) -> Option<Probe> {
    let support = belief_support(ps, cfg.w_thr_factor);
    let center = weighted_mean(&support);
    let spread = support.iter().map(|p| (p.pose - center).norm()).fold(0.0, f64::max);
    let obs_r = task.obstacle.iter().map(radius).fold(0.0, f64::max);
    let reach = spread + obs_r + radius(&task.tool) + PROBE_MARGIN;
    let block = task.block.translated(*block_pos);
    let mut best: Option<(f64, Probe)> = None;
    for a in &task.actions {
        let start = center - a.direction * reach;
        let tool = task.tool.translated(start);
        if overlaps(&tool, &block) {
            continue;
        }
        let model = ContactModel::absolute(task.obstacle.clone(), tool, vec![block.clone()]);
        if !support.iter().all(|p| model.feasible(&p.pose)) {
            continue;
        }
        let max_dist = 2.0 * reach;
        let Ok(ig) = evaluate_information_gain(
            &support,
            std::slice::from_ref(a),
            &model,
            cfg.alpha1,
            cfg.alpha2,
            max_dist,
        ) else {
            continue;
        };
        let score = ig.scores[0];
        if best.as_ref().is_none_or(|(s, _)| score > *s + 1e-12) {
            best = Some((
                score,
                Probe {
                    start,
                    action: a.clone(),
                    model,
                    max_dist,
                },
            ));
        }
    }
    best.map(|(_, p)| p)
}

/// Pushes the block into the target region, localizing and routing
/// around an obstacle discovered on the way.
pub fn run_push<W: PushWorld>(task: &PushTask, world: &mut W, cfg: &PolicyConfig) -> PushReport {
    let mut report = PushReport {
        scenario: task.name.clone(),
        seed: cfg.seed,
        legs: Vec::new(),
        exploration_steps: 0,
        steps: Vec::new(),
        replans: 0,
        obstacle_estimate: None,
        obstacle_error_mm: None,
        obstacle_converged: false,
        block_estimate: [task.block_start.x, task.block_start.y],
        block_final: None,
        block_in_target: false,
        success: false,
        failure: None,
    };
    let mut init_rng = rng::stream(cfg.seed, rng::BELIEF_INIT);
    let mut resample_rng = rng::stream(cfg.seed, rng::RESAMPLE);
    let mut block_pos = task.block_start;
    let target_center = task.target.centroid();

    let mut belief: Option<ParticleSet> = None;
    if let (Some(region), false) = (&task.prior_region, task.obstacle.is_empty()) {
        let block_model = ContactModel::absolute(task.obstacle.clone(), task.block.translated(block_pos), vec![]);
        let tool_model = ContactModel::absolute(
            task.obstacle.clone(),
            task.tool.translated(world.tool_position()),
            vec![],
        );
        match init_particles_with(region, cfg.particles, &mut init_rng, |p| {
            block_model.feasible(p) && tool_model.feasible(p)
        }) {
            Ok(ps) => belief = Some(ps),
            Err(e) => {
                report.failure = Some(e.to_string());
                return finish(report, task, world, block_pos);
            }
        }
    }
    let mut converged = false;

    'outer: while !task.target.contains(&block_pos) {
        if report.replans > MAX_REPLANS {
            report.failure = Some(format!("replan cap {MAX_REPLANS} exceeded"));
            break;
        }
        let (obstacles, margin) = match (&belief, converged) {
            (Some(ps), true) => {
                let support = belief_support(ps, cfg.w_thr_factor);
                let est = weighted_mean(&support);
                let placed: Vec<Contour> = task.obstacle.iter().map(|c| c.translated(est)).collect();
                (placed, ROUTE_MARGIN + support_diameter(&support))
            }
            _ => (Vec::new(), ROUTE_MARGIN),
        };
        let Some(route) = plan_route(task, &block_pos, &target_center, &obstacles, margin) else {
            report.failure = Some("no clear route to the target".into());
            break;
        };
        for wp in route {
            let d = wp - block_pos;
            let len = d.norm();
            let dir = d / len;
            if let Err(e) = world.place_tool(&tool_behind(task, &block_pos, &dir)) {
                report.failure = Some(format!("cannot stage the tool: {e}"));
                break 'outer;
            }
            let before = block_pos;
            let out = world.execute_push(&dir, len);
            for e in &out.events {
                log::debug!("push event: {e}");
            }
            block_pos += dir * out.block_traveled;
            report.legs.push(PushLeg {
                from: [before.x, before.y],
                to: [wp.x, wp.y],
                block_traveled_mm: out.block_traveled,
                blocked: out.blocked,
            });
            if out.tool_traveled == 0.0 && out.block_traveled == 0.0 && !out.blocked {
                report.failure = Some("tool could not reach the block".into());
                break 'outer;
            }
            let Some(ps) = belief.as_mut() else {
                if out.blocked {
                    report.failure = Some("blocked by an obstacle outside the model".into());
                    break 'outer;
                }
                continue;
            };
            let action = Action::new(dir, "push");
            let block_model = ContactModel::absolute(task.obstacle.clone(), task.block.translated(before), vec![]);
            let moved = MoveOutcome {
                traveled: out.block_traveled,
                contact: out.blocked,
                reading: out.reading.clone(),
            };
            if out.blocked {
                match belief_step(ps, &block_model, &block_model, &action, &moved, cfg, &mut resample_rng) {
                    Ok(u) => *ps = u.set,
                    Err(e) => {
                        report.failure = Some(format!("obstacle belief lost: {e}"));
                        break 'outer;
                    }
                }
                explore_obstacle(task, world, cfg, ps, &block_pos, &mut report, &mut resample_rng);
                converged = report.obstacle_converged;
                record_estimate(&mut report, ps, cfg, world);
                report.replans += 1;
                continue 'outer;
            } else if let Ok(pruned) = prune_no_contact(ps, out.block_traveled, &action, &block_model, cfg.delta_d) {
                *ps = pruned.set;
            }
        }
        if !task.target.contains(&block_pos) {
            report.replans += 1;
        }
    }
    if let Some(ps) = &belief {
        if report.obstacle_estimate.is_some() {
            record_estimate(&mut report, ps, cfg, world);
        }
    }
    finish(report, task, world, block_pos)
}

fn record_estimate<W: PushWorld>(report: &mut PushReport, ps: &ParticleSet, cfg: &PolicyConfig, world: &W) {
    let est = weighted_mean(&belief_support(ps, cfg.w_thr_factor));
    report.obstacle_estimate = Some([est.x, est.y]);
    report.obstacle_error_mm = world.obstacle_truth().map(|t| (t - est).norm());
}

fn finish<W: PushWorld>(mut report: PushReport, task: &PushTask, world: &W, block_pos: Vec2) -> PushReport {
    report.block_estimate = [block_pos.x, block_pos.y];
    let truth = world.block_truth();
    report.block_final = truth.map(|t| [t.x, t.y]);
    report.block_in_target = task.target.contains(&truth.unwrap_or(block_pos));
    report.success = report.block_in_target && report.failure.is_none();
    report
}

/// Tool probes on the obstacle until its belief converges or the budget
/// runs out.
fn explore_obstacle<W: PushWorld, R: rand::Rng + ?Sized>(
    task: &PushTask,
    world: &mut W,
    cfg: &PolicyConfig,
    ps: &mut ParticleSet,
    block_pos: &Vec2,
    report: &mut PushReport,
    rng: &mut R,
) {
    let mut failures = 0;
    loop {
        if failures >= MAX_FAILED_PROBES {
            log::warn!("obstacle probes keep contradicting the belief; giving up");
            return;
        }
        let support = belief_support(ps, cfg.w_thr_factor);
        let (done, _) = belief_converged(&support, cfg.delta_thr, cfg.n_thr);
        if done {
            report.obstacle_converged = true;
            return;
        }
        if report.exploration_steps >= cfg.max_iterations {
            log::warn!("obstacle exploration budget spent before convergence");
            return;
        }
        let Some(probe) = choose_probe(task, ps, block_pos, cfg) else {
            log::warn!("no feasible probe start around the obstacle hypotheses");
            return;
        };
        if let Err(e) = world.place_tool(&probe.start) {
            log::warn!("probe start rejected: {e}");
            return;
        }
        let out = world.execute_move(&probe.action.direction, probe.max_dist);
        report.exploration_steps += 1;
        let (pairs, note) = match belief_step(ps, &probe.model, &probe.model, &probe.action, &out, cfg, rng) {
            Ok(u) => {
                *ps = u.set;
                failures = 0;
                (u.pairs, u.note)
            }
            Err(e) => {
                log::warn!("probe {}: {e}; keeping the previous belief", report.exploration_steps);
                failures += 1;
                (Vec::new(), Some(format!("{e}; update skipped")))
            }
        };
        let support = belief_support(ps, cfg.w_thr_factor);
        let (_, clusters) = belief_converged(&support, cfg.delta_thr, cfg.n_thr);
        let tool = world.tool_position();
        report.steps.push(StepRecord {
            step: report.exploration_steps,
            action: probe.action.label.clone(),
            traveled_mm: out.traveled,
            contact: out.contact,
            candidate_pairs: pairs,
            particle_count: ps.len(),
            particle_std_mm: ps.std_mm(),
            peak_count: detect_peaks(ps, cfg.w_thr_factor).len(),
            cluster_count: clusters,
            contact_point_mm: None,
            object_pose: [tool.x, tool.y, 0.0],
            region_area_mm2: 0.0,
            note,
        });
    }
}
