use super::{
    backtrack_weight_update, belief_support, detect_peaks, evaluate_information_gain, init_particles_with,
    prune_no_contact, prune_particles_by_force, replenish, select_contact_pairs, spiral_search, support_diameter,
    Action, ContactModel, ContactObservation, ExplorationError, Particle, ParticleSet, Pruned,
};
use crate::estimation::{
    alignment_check, env_region_update, pose_to_isometry, project_to_plane, solve_map, AlignmentThresholds, EnvRegion,
    GaussianFactor, StateChain, StateVar,
};
use crate::geometry::{Contour, Pose2, Vec2};
use crate::rng;
use crate::tactile::{estimate_contact_point, in_hand_transform, LeverArms, PrismBody, SensorReading, Vec3};
use nalgebra::Isometry3;
use ordered_float::OrderedFloat;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

/// Tunables of the exploration loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub seed: u64,
    /// Initial particle count.
    pub particles: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Likelihood multiplier for a mismatching backtracked prediction.
    pub gamma: f64,
    /// Contact-distance gate, mm.
    pub delta_d: f64,
    /// Peak-support diameter for convergence, mm.
    pub delta_thr: f64,
    /// Peak cluster count for convergence.
    pub n_thr: usize,
    pub w_thr_factor: f64,
    pub replenish_trigger: usize,
    pub replenish_target: usize,
    pub jitter_sigma: f64,
    pub max_iterations: usize,
    /// Longest single probing move, mm.
    pub probe_distance: f64,
    /// Trajectory discretization for the backtracking update, mm.
    pub backtrack_step: f64,
    /// Contact tolerance at backtracked poses, mm.
    pub backtrack_tol: f64,
    pub spiral_pitch: f64,
    pub spiral_max_radius: f64,
    pub alignment: AlignmentThresholds,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            particles: 300,
            alpha1: 1.0,
            alpha2: 1.0,
            gamma: 0.1,
            delta_d: 3.0,
            delta_thr: 5.0,
            n_thr: 10,
            w_thr_factor: 1.0,
            replenish_trigger: 30,
            replenish_target: 100,
            jitter_sigma: 2.0,
            max_iterations: 40,
            probe_distance: 60.0,
            backtrack_step: 1.0,
            backtrack_tol: 0.5,
            spiral_pitch: 1.0,
            spiral_max_radius: 10.0,
            alignment: AlignmentThresholds::default(),
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("alpha1", self.alpha1 >= 0.0),
            ("alpha2", self.alpha2 >= 0.0),
            ("gamma", self.gamma > 0.0 && self.gamma <= 1.0),
            ("delta_d", self.delta_d > 0.0),
            ("delta_thr", self.delta_thr > 0.0),
            ("n_thr", self.n_thr > 0),
            ("w_thr_factor", self.w_thr_factor > 0.0),
            ("particles", self.particles > 0),
            ("replenish_target", self.replenish_target > 0),
            ("jitter_sigma", self.jitter_sigma >= 0.0),
            ("probe_distance", self.probe_distance > 0.0),
            ("backtrack_step", self.backtrack_step > 0.0),
            ("spiral_pitch", self.spiral_pitch > 0.0),
            ("f_ali", self.alignment.f_ali > 0.0),
            ("d_ali", self.alignment.d_ali > 0.0),
        ];
        match positive.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(format!("{name} is out of range")),
            None => Ok(()),
        }
    }
}

/// Prior knowledge for a socket-style alignment task.
#[derive(Debug, Clone, PartialEq)]
pub struct SocketTask {
    pub name: String,
    /// Environment contours in the environment frame.
    pub env: Vec<Contour>,
    /// Grasped footprint with its reference point at the origin.
    pub obj: Contour,
    pub body: PrismBody,
    pub arms: LeverArms,
    /// Goal reference-point position in the environment frame.
    pub goal: Vec2,
    /// Where the reference point may start, environment frame.
    pub prior_region: Contour,
    pub actions: Vec<Action>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveOutcome {
    pub traveled: f64,
    pub contact: bool,
    pub reading: SensorReading,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentProbe {
    pub net_force: Vec3,
    pub distance: f64,
}

/// What the policy can do to and learn from the world.
pub trait ProbeWorld {
    fn gripper_pose(&self) -> Pose2;
    /// Translates the grasped object along unit `direction` until contact
    /// or `max_dist`.
    fn execute_move(&mut self, direction: &Vec2, max_dist: f64) -> MoveOutcome;
    /// Attempts insertion at the current pose.
    fn probe_alignment(&mut self) -> AlignmentProbe;
    /// True reference point in the environment frame, for scoring only.
    fn reference_truth(&self) -> Option<Vec2>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: String,
    pub traveled_mm: f64,
    pub contact: bool,
    pub candidate_pairs: Vec<String>,
    pub particle_count: usize,
    pub particle_std_mm: f64,
    pub peak_count: usize,
    pub cluster_count: usize,
    pub contact_point_mm: Option<[f64; 3]>,
    pub object_pose: [f64; 3],
    pub region_area_mm2: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationReport {
    pub scenario: String,
    pub seed: u64,
    pub initial_particle_count: usize,
    pub initial_std_mm: f64,
    pub steps: Vec<StepRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub aligned: bool,
    pub spiral_waypoints: usize,
    pub estimate: [f64; 2],
    pub final_error_mm: Option<f64>,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl ExplorationReport {
    /// Std after initialization followed by the std after each step.
    pub fn std_series(&self) -> Vec<f64> {
        std::iter::once(self.initial_std_mm)
            .chain(self.steps.iter().map(|s| s.particle_std_mm))
            .collect()
    }
}

/// Convergence test on the belief support: fewer than `n_thr` clusters
/// of radius `delta_thr`, and the support diameter below `delta_thr`.
/// Returns the verdict and the cluster count.
pub fn belief_converged(support: &[Particle], delta_thr: f64, n_thr: usize) -> (bool, usize) {
    let mut order: Vec<usize> = (0..support.len()).collect();
    order.sort_by(|&a, &b| support[b].weight.total_cmp(&support[a].weight).then(a.cmp(&b)));
    let mut seeds: Vec<Vec2> = Vec::new();
    for i in order {
        let p = support[i].pose;
        if !seeds.iter().any(|s| (s - p).norm() <= delta_thr) {
            seeds.push(p);
        }
    }
    let clusters = seeds.len();
    (clusters < n_thr && support_diameter(support) < delta_thr, clusters)
}

/// Times the pruning distance gate doubles before a collapse is declared.
const GATE_WIDENINGS: usize = 2;

pub(crate) struct StepUpdate {
    pub set: ParticleSet,
    pub pairs: Vec<String>,
    pub note: Option<String>,
}

/// Belief update for one executed move: prune, dead-reckon, backtrack,
/// snap contacts onto the observed stop, and replenish.
pub(crate) fn belief_step<R: Rng + ?Sized>(
    ps: &ParticleSet,
    model_start: &ContactModel,
    model_end: &ContactModel,
    action: &Action,
    outcome: &MoveOutcome,
    cfg: &PolicyConfig,
    rng: &mut R,
) -> Result<StepUpdate, ExplorationError> {
    let d = outcome.traveled;
    let mut note = None;
    let mut pair_labels = Vec::new();
    let mut snap = false;
    let gated = |prune: &dyn Fn(f64) -> Result<Pruned, ExplorationError>, note: &mut Option<String>| {
        let mut gate = cfg.delta_d;
        for _ in 0..GATE_WIDENINGS {
            match prune(gate) {
                Err(ExplorationError::BeliefCollapse) => gate *= 2.0,
                Ok(p) if gate > cfg.delta_d => {
                    *note = Some(format!("distance gate widened to {gate} mm"));
                    return Ok(p);
                }
                other => return other,
            }
        }
        prune(gate)
    };
    let pruned: Pruned = if outcome.contact {
        let net_f = outcome.reading.net_force().unwrap_or_else(|_| Vec3::zeros());
        let dir = Vec2::new(net_f.x, net_f.y).try_normalize(1e-12);
        match select_contact_pairs(&net_f, &model_start.pair_env(), &model_start.obj) {
            Ok(pairs) => {
                pair_labels = pairs.iter().map(|p| p.to_string()).collect();
                snap = true;
                gated(
                    &|g| prune_particles_by_force(ps, &pairs, dir, d, action, model_start, g),
                    &mut note,
                )?
            }
            Err(ExplorationError::UnmodeledContact) => {
                snap = true;
                let p = gated(
                    &|g| prune_particles_by_force(ps, &[], dir, d, action, model_start, g),
                    &mut note,
                )?;
                note.get_or_insert_with(|| "vertex contact".to_string());
                p
            }
            Err(e) => {
                log::warn!("contact not explained by the model ({e}); belief left unpruned");
                note = Some(format!("unmodeled contact: {e}"));
                let predicted = vec![d; ps.len()];
                Pruned {
                    set: ps.clone(),
                    predicted,
                }
            }
        }
    } else {
        gated(&|g| prune_no_contact(ps, d, action, model_start, g), &mut note)?
    };

    let shift = action.direction * d;
    let mut moved = pruned.set.clone();
    for p in &mut moved.particles {
        p.pose = model_start.advance(&p.pose, &shift);
    }
    let steps = ((d / cfg.backtrack_step).ceil() as usize).max(1);
    let force = outcome.reading.net_force().unwrap_or_else(|_| Vec3::zeros());
    let obs: Vec<ContactObservation> = (1..=steps)
        .map(|t| ContactObservation {
            time: t,
            net_force: if t == steps && outcome.contact {
                force
            } else {
                Vec3::zeros()
            },
            traveled: d * t as f64 / steps as f64,
            candidate_pairs: Vec::new(),
        })
        .collect();
    let mut updated = backtrack_weight_update(&moved, &obs, action, model_end, cfg.gamma, cfg.backtrack_tol)?;

    if outcome.contact && snap {
        for (p, di) in updated.particles.iter_mut().zip(&pruned.predicted) {
            p.pose = model_end.relative_shift(&p.pose, &(action.direction * (di - d)));
        }
    }

    if updated.len() < cfg.replenish_trigger {
        updated = replenish(&updated, cfg.replenish_target, cfg.jitter_sigma, rng, |p| {
            model_end.feasible(p)
        })?;
    }
    Ok(StepUpdate {
        set: updated,
        pairs: pair_labels,
        note,
    })
}

/// Clearance kept around goal-path legs for estimate error, mm.
const GOAL_PATH_CLEARANCE: f64 = 1.5;
/// Cost factor for legs only the bare body fits through.
const TIGHT_LEG_COST: f64 = 4.0;
/// Grid spacing for goal-path search, mm.
const GOAL_PATH_GRID: f64 = 2.0;
/// Reach of the goal-path grid beyond the start and goal, mm.
const GOAL_PATH_REACH: f64 = 50.0;

/// Straight path to the goal when it keeps clearance, else the cheapest
/// route over a start-anchored grid, shortcut where the model allows.
/// Legs that only the bare body fits through cost extra.
pub fn plan_goal_path(model: &ContactModel, from: &Vec2, to: &Vec2) -> Vec<Vec2> {
    let (lo, hi) = model.obj.bounds();
    let padded = Contour::rectangle(
        model.obj.id(),
        (lo + hi) / 2.0,
        hi.x - lo.x + 2.0 * GOAL_PATH_CLEARANCE,
        hi.y - lo.y + 2.0 * GOAL_PATH_CLEARANCE,
    )
    .expect("bounds of a valid contour have positive size");
    let roomy = ContactModel::relative(model.env.clone(), padded);
    let clear_in = |m: &ContactModel, a: &Vec2, b: &Vec2| -> bool {
        let d = b - a;
        let len = d.norm();
        len < 1e-9
            || m.predict(a, &Action::new(d, "goal"), len)
                .is_ok_and(|p| p.pair.is_none() || p.distance >= len - 1e-6)
    };
    // Cost of a leg, if it is passable at all.
    let cost = |a: &Vec2, b: &Vec2| -> Option<f64> {
        let len = (b - a).norm();
        if roomy.feasible(a) && clear_in(&roomy, a, b) {
            Some(len)
        } else if clear_in(model, a, b) {
            Some(len * TIGHT_LEG_COST)
        } else {
            None
        }
    };
    if roomy.feasible(from) && clear_in(&roomy, from, to) {
        return vec![*to];
    }
    let g = GOAL_PATH_GRID;
    let point = |c: (i64, i64)| from + Vec2::new(c.0 as f64 * g, c.1 as f64 * g);
    let goal = ((to - from) / g).map(|v| v.round() as i64);
    let reach = (GOAL_PATH_REACH / g).ceil() as i64;
    let (lo, hi) = (
        (goal.x.min(0) - reach, goal.y.min(0) - reach),
        (goal.x.max(0) + reach, goal.y.max(0) + reach),
    );

    let mut dist: HashMap<(i64, i64), f64> = HashMap::new();
    let mut prev: HashMap<(i64, i64), (i64, i64)> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert((0, 0), 0.0);
    heap.push(Reverse((OrderedFloat(0.0), (0, 0))));
    let mut best: Option<(f64, (i64, i64))> = None;
    while let Some(Reverse((OrderedFloat(d), c))) = heap.pop() {
        if d > dist[&c] || best.is_some_and(|(b, _)| d >= b) {
            continue;
        }
        let p = point(c);
        if (p - to).norm() <= 2.0 * g {
            if let Some(k) = cost(&p, to) {
                if best.is_none_or(|(b, _)| d + k < b) {
                    best = Some((d + k, c));
                }
            }
        }
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let n = (c.0 + dx, c.1 + dy);
            if n.0 < lo.0 || n.0 > hi.0 || n.1 < lo.1 || n.1 > hi.1 {
                continue;
            }
            let q = point(n);
            if dist.get(&n).is_some_and(|&old| old <= d) || !model.feasible(&q) {
                continue;
            }
            let Some(k) = cost(&p, &q) else { continue };
            if dist.get(&n).is_some_and(|&old| old <= d + k) {
                continue;
            }
            dist.insert(n, d + k);
            prev.insert(n, c);
            heap.push(Reverse((OrderedFloat(d + k), n)));
        }
    }
    let Some((_, end)) = best else {
        return vec![*to];
    };
    let mut chain = vec![*to, point(end)];
    let mut c = end;
    while let Some(&n) = prev.get(&c) {
        chain.push(point(n));
        c = n;
    }
    chain.reverse();

    // Shortcut: from each anchor jump to the furthest point reachable at
    // no more than the cost of following the chain.
    let mut path = Vec::new();
    let mut i = 0;
    while i + 1 < chain.len() {
        let along = |j: usize| -> f64 {
            (i..j)
                .map(|k| cost(&chain[k], &chain[k + 1]).unwrap_or(f64::INFINITY))
                .sum()
        };
        let j = (i + 1..chain.len())
            .rev()
            .find(|&j| cost(&chain[i], &chain[j]).is_some_and(|k| k <= along(j) + 1e-9))
            .unwrap_or(i + 1);
        path.push(chain[j]);
        i = j;
    }
    path
}

fn move_to<W: ProbeWorld>(world: &mut W, from: &Vec2, to: &Vec2) -> Vec2 {
    let d = to - from;
    let len = d.norm();
    if len < 1e-9 {
        return *from;
    }
    let dir = d / len;
    let out = world.execute_move(&dir, len);
    from + dir * out.traveled
}

/// Active tactile exploration for a socket-style task: probe until the
/// belief is unimodal and tight, move to the goal, then confirm alignment
/// with a spiral search if needed.
pub fn run_policy<W: ProbeWorld>(task: &SocketTask, world: &mut W, cfg: &PolicyConfig) -> ExplorationReport {
    let mut report = ExplorationReport {
        scenario: task.name.clone(),
        seed: cfg.seed,
        initial_particle_count: 0,
        initial_std_mm: 0.0,
        steps: Vec::new(),
        iterations: 0,
        converged: false,
        aligned: false,
        spiral_waypoints: 0,
        estimate: [f64::NAN; 2],
        final_error_mm: None,
        success: false,
        failure: None,
    };
    let model = ContactModel::relative(task.env.clone(), task.obj.clone());
    let mut init_rng = rng::stream(cfg.seed, rng::BELIEF_INIT);
    let mut resample_rng = rng::stream(cfg.seed, rng::RESAMPLE);

    let mut ps = match init_particles_with(&task.prior_region, cfg.particles, &mut init_rng, |p| model.feasible(p)) {
        Ok(ps) => ps,
        Err(e) => {
            report.failure = Some(e.to_string());
            return report;
        }
    };
    report.initial_particle_count = ps.len();
    report.initial_std_mm = ps.std_mm();

    let g0 = world.gripper_pose().translation();
    let mut region = EnvRegion::from_points(task.prior_region.vertices().iter().map(|v| g0 - v).collect());
    // net displacement since the start, to re-seed the prior after a collapse
    let mut drift = Vec2::zeros();

    let probe = world.probe_alignment();
    if alignment_check(&probe.net_force, probe.distance, &cfg.alignment) {
        report.aligned = true;
        report.converged = true;
        report.success = true;
        let est = ps.mean();
        report.estimate = [est.x, est.y];
        return report;
    }

    let mut stalled: Vec<String> = Vec::new();
    loop {
        let support = belief_support(&ps, cfg.w_thr_factor);
        let (done, _) = belief_converged(&support, cfg.delta_thr, cfg.n_thr);
        if done {
            report.converged = true;
            break;
        }
        if report.iterations >= cfg.max_iterations {
            report.failure = Some(format!("iteration cap {} reached", cfg.max_iterations));
            break;
        }
        // A move that stalled at contact is not retried until the gripper
        // has moved elsewhere; repeating it yields no new information.
        let open: Vec<Action> = task
            .actions
            .iter()
            .filter(|a| !stalled.contains(&a.label))
            .cloned()
            .collect();
        let open = if open.is_empty() { task.actions.clone() } else { open };
        let ig = match evaluate_information_gain(&support, &open, &model, cfg.alpha1, cfg.alpha2, cfg.probe_distance) {
            Ok(ig) => ig,
            Err(e) => {
                report.failure = Some(e.to_string());
                break;
            }
        };
        let action = open[ig.best].clone();
        let outcome = world.execute_move(&action.direction, cfg.probe_distance);
        if outcome.traveled < cfg.backtrack_step {
            stalled.push(action.label.clone());
        } else {
            stalled.clear();
        }
        report.iterations += 1;
        drift += action.direction * outcome.traveled;

        let (next, pairs, note) = match belief_step(&ps, &model, &model, &action, &outcome, cfg, &mut resample_rng) {
            Ok(u) => (u.set, u.pairs, u.note),
            Err(e) => {
                log::warn!(
                    "step {}: {e}; re-seeding belief from the prior region",
                    report.iterations
                );
                let note = Some(format!("{e}; belief re-seeded from the prior"));
                let shifted = task.prior_region.translated(drift);
                match init_particles_with(&shifted, cfg.replenish_target, &mut resample_rng, |p| model.feasible(p)) {
                    Ok(s) => (s, Vec::new(), note),
                    Err(e) => {
                        report.failure = Some(e.to_string());
                        break;
                    }
                }
            }
        };
        ps = next;
        ps.time_index = report.iterations;

        let object = estimate_object_pose(world.gripper_pose(), &outcome.reading, &task.arms);
        region = match env_region_update(&region, &object, &ps.positions()) {
            Ok(r) => r,
            Err(_) => {
                log::info!("environment region re-seeded from the current support");
                EnvRegion::from_points(ps.positions().iter().map(|p| object.translation() - p).collect())
            }
        };

        let contact_point = if outcome.contact {
            let f = outcome.reading.net_force().ok();
            let m = outcome.reading.resultant_torque(&task.arms).ok();
            match (f, m) {
                (Some(f), Some(m)) => estimate_contact_point(&f, &m, &task.body).ok().map(|c| [c.x, c.y, c.z]),
                _ => None,
            }
        } else {
            None
        };
        let support = belief_support(&ps, cfg.w_thr_factor);
        let (_, clusters) = belief_converged(&support, cfg.delta_thr, cfg.n_thr);
        report.steps.push(StepRecord {
            step: report.iterations,
            action: action.label.clone(),
            traveled_mm: outcome.traveled,
            contact: outcome.contact,
            candidate_pairs: pairs,
            particle_count: ps.len(),
            particle_std_mm: ps.std_mm(),
            peak_count: detect_peaks(&ps, cfg.w_thr_factor).len(),
            cluster_count: clusters,
            contact_point_mm: contact_point,
            object_pose: [object.x, object.y, object.theta],
            region_area_mm2: region.area(),
            note,
        });
    }

    let estimate = belief_support(&ps, cfg.w_thr_factor);
    let est = super::weighted_mean(&estimate);
    report.estimate = [est.x, est.y];
    if let Some(truth) = world.reference_truth() {
        report.final_error_mm = Some((est - truth).norm());
    }
    if !report.converged {
        return report;
    }

    // Move to the goal through the modeled free space, then try insertion.
    let mut here = est;
    for wp in plan_goal_path(&model, &est, &task.goal) {
        here = move_to(world, &here, &wp);
    }
    let probe = world.probe_alignment();
    report.aligned = alignment_check(&probe.net_force, probe.distance, &cfg.alignment);
    if !report.aligned {
        let center = here;
        for wp in spiral_search(&center, cfg.spiral_pitch, cfg.spiral_max_radius)
            .iter()
            .skip(1)
        {
            here = move_to(world, &here, wp);
            report.spiral_waypoints += 1;
            let probe = world.probe_alignment();
            if alignment_check(&probe.net_force, probe.distance, &cfg.alignment) {
                report.aligned = true;
                break;
            }
        }
        if !report.aligned {
            report.failure = Some("spiral search exhausted without alignment".into());
        }
    }
    report.success = report.converged && report.aligned;
    report
}

/// Object pose from the gripper pose and the marker-registered in-hand
/// transform, fused by a one-step MAP solve.
pub(crate) fn estimate_object_pose(gripper: Pose2, reading: &SensorReading, arms: &LeverArms) -> Pose2 {
    let to_pad = Isometry3::translation(arms.left.x, arms.left.y, arms.left.z);
    let pad_to_object = to_pad.inverse();
    let in_hand = match in_hand_transform(&reading.markers, &pad_to_object) {
        Ok(t) => to_pad * t,
        Err(_) => Isometry3::identity(),
    };
    let prior = project_to_plane(&(pose_to_isometry(&gripper) * in_hand));
    let mut chain = StateChain::identity(1);
    chain.gripper[0] = gripper;
    chain.object[0] = prior;
    chain.fix(StateVar::Gripper(0));
    let factors = [GaussianFactor::object_from_gripper(0, in_hand)];
    match solve_map(&chain, &factors) {
        Ok(sol) => sol.chain.object[0],
        Err(_) => prior,
    }
}
