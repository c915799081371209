//! Active tactile exploration: a particle belief over the relative
//! reference point, information-gain action selection, contact-pair
//! pruning, backtracking weight updates and the outer policy loop.

mod policy;
mod push;

pub use policy::{
    belief_converged, plan_goal_path, run_policy, AlignmentProbe, ExplorationReport, MoveOutcome, PolicyConfig,
    ProbeWorld, SocketTask, StepRecord,
};
pub use push::{run_push, PushLeg, PushOutcome, PushReport, PushTask, PushWorld};

use crate::geometry::{
    compass_directions, penetration_depth, sweep_first_contact, ContactPair, Contour, GeometryError, Vec2,
    PENETRATION_TOL,
};
use crate::tactile::{Vec3, F_MIN};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use thiserror::Error;

/// Cosine of the widest angle between the planar force and a candidate
/// edge normal for the pair to be accepted.
pub const FORCE_CONE_COS: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExplorationError {
    #[error("particle count must be positive")]
    NoParticles,
    #[error("action list is empty")]
    NoActions,
    #[error("belief collapsed: no particle survives")]
    BeliefCollapse,
    #[error("net force {0:.4} N is below the contact threshold")]
    BelowThreshold(f64),
    #[error("no modeled contact pair explains the measured force")]
    UnmodeledContact,
    #[error("prior region admits no feasible particle")]
    InfeasiblePrior,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub pose: Vec2,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    pub particles: Vec<Particle>,
    pub time_index: usize,
}

impl ParticleSet {
    /// Equal-weight set over `points`.
    pub fn uniform(points: Vec<Vec2>, time_index: usize) -> Self {
        let w = 1.0 / points.len().max(1) as f64;
        Self {
            particles: points.into_iter().map(|pose| Particle { pose, weight: w }).collect(),
            time_index,
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.particles.iter().map(|p| p.pose).collect()
    }

    /// Rescales weights to sum to one.
    pub fn normalize(&mut self) -> Result<(), ExplorationError> {
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(ExplorationError::BeliefCollapse);
        }
        for p in &mut self.particles {
            p.weight /= total;
        }
        Ok(())
    }

    pub fn mean(&self) -> Vec2 {
        weighted_mean(&self.particles)
    }

    /// Weighted radial standard deviation `sqrt(var_x + var_y)`, mm.
    pub fn std_mm(&self) -> f64 {
        weighted_std(&self.particles)
    }
}

pub fn weighted_mean(ps: &[Particle]) -> Vec2 {
    let total: f64 = ps.iter().map(|p| p.weight).sum();
    if total <= 0.0 {
        return ps.iter().map(|p| p.pose).sum::<Vec2>() / ps.len().max(1) as f64;
    }
    ps.iter().map(|p| p.pose * p.weight).sum::<Vec2>() / total
}

pub fn weighted_std(ps: &[Particle]) -> f64 {
    if ps.is_empty() {
        return 0.0;
    }
    let total: f64 = ps.iter().map(|p| p.weight).sum();
    let m = weighted_mean(ps);
    let uniform = total <= 0.0;
    let var: f64 = ps
        .iter()
        .map(|p| {
            let w = if uniform { 1.0 } else { p.weight };
            w * (p.pose - m).norm_squared()
        })
        .sum::<f64>()
        / if uniform { ps.len() as f64 } else { total };
    var.sqrt()
}

/// Largest pairwise distance.
pub fn support_diameter(ps: &[Particle]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in ps.iter().enumerate() {
        for b in &ps[i + 1..] {
            d = d.max((a.pose - b.pose).norm());
        }
    }
    d
}

/// A translational probing action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub direction: Vec2,
    pub label: String,
}

impl Action {
    pub fn new(direction: Vec2, label: impl Into<String>) -> Self {
        Self {
            direction: direction.normalize(),
            label: label.into(),
        }
    }

    /// The eight compass translations, east first, counterclockwise.
    pub fn compass() -> Vec<Action> {
        compass_directions().iter().map(|(l, d)| Action::new(*d, *l)).collect()
    }
}

/// One tactile observation along an executed trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactObservation {
    pub time: usize,
    pub net_force: Vec3,
    pub traveled: f64,
    pub candidate_pairs: Vec<ContactPair>,
}

impl ContactObservation {
    pub fn is_contact(&self) -> bool {
        self.net_force.norm() > F_MIN
    }
}

/// Predicted outcome of sweeping along an action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// `None` when nothing is touched within the sweep.
    pub pair: Option<ContactPair>,
    pub distance: f64,
    /// Contact normal acting on the moving body.
    pub normal: Option<Vec2>,
}

/// Places `obj` with its reference point at `pose` and sweeps it along
/// `action` through the environment.
pub fn predict_contact(
    pose: &Vec2,
    action: &Action,
    env: &[Contour],
    obj: &Contour,
    max_dist: f64,
) -> Result<Prediction, GeometryError> {
    let placed = obj.translated(*pose);
    Ok(match sweep_first_contact(&placed, &action.direction, max_dist, env)? {
        Some(hit) => Prediction {
            pair: Some(hit.pair),
            distance: hit.distance,
            normal: Some(hit.normal),
        },
        None => Prediction {
            pair: None,
            distance: max_dist,
            normal: None,
        },
    })
}

/// What a particle hypothesizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BeliefFrame {
    /// Position of the moving body's reference point in the environment
    /// frame; moves with the body.
    Relative,
    /// World placement of the environment contours; the moving body is
    /// known and the hypothesis stays put while it moves.
    Absolute,
}

/// Known geometry behind the particle predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactModel {
    pub frame: BeliefFrame,
    /// Environment contours in their own frame.
    pub env: Vec<Contour>,
    /// Moving body: local frame for `Relative`, world placement for
    /// `Absolute`.
    pub obj: Contour,
    /// Known world contours, consulted only in the `Absolute` frame.
    pub statics: Vec<Contour>,
}

impl ContactModel {
    pub fn relative(env: Vec<Contour>, obj: Contour) -> Self {
        Self {
            frame: BeliefFrame::Relative,
            env,
            obj,
            statics: Vec::new(),
        }
    }

    pub fn absolute(env: Vec<Contour>, moving: Contour, statics: Vec<Contour>) -> Self {
        Self {
            frame: BeliefFrame::Absolute,
            env,
            obj: moving,
            statics,
        }
    }

    fn sign(&self) -> f64 {
        match self.frame {
            BeliefFrame::Relative => 1.0,
            BeliefFrame::Absolute => -1.0,
        }
    }

    fn scene(&self, p: &Vec2) -> (Contour, Vec<Contour>) {
        match self.frame {
            BeliefFrame::Relative => (self.obj.translated(*p), self.env.clone()),
            BeliefFrame::Absolute => {
                let mut statics: Vec<Contour> = self.env.iter().map(|c| c.translated(*p)).collect();
                statics.extend(self.statics.iter().cloned());
                (self.obj.clone(), statics)
            }
        }
    }

    pub fn predict(&self, p: &Vec2, action: &Action, max_dist: f64) -> Result<Prediction, GeometryError> {
        match self.frame {
            BeliefFrame::Relative => predict_contact(p, action, &self.env, &self.obj, max_dist),
            BeliefFrame::Absolute => {
                let (moving, statics) = self.scene(p);
                Ok(
                    match sweep_first_contact(&moving, &action.direction, max_dist, &statics)? {
                        Some(hit) => Prediction {
                            pair: Some(hit.pair),
                            distance: hit.distance,
                            normal: Some(hit.normal),
                        },
                        None => Prediction {
                            pair: None,
                            distance: max_dist,
                            normal: None,
                        },
                    },
                )
            }
        }
    }

    /// No interpenetration beyond tolerance at hypothesis `p`.
    pub fn feasible(&self, p: &Vec2) -> bool {
        let (moving, statics) = self.scene(p);
        let (lo, hi) = moving.bounds();
        statics.iter().all(|s| {
            let (slo, shi) = s.bounds();
            let apart = lo.x > shi.x || lo.y > shi.y || slo.x > hi.x || slo.y > hi.y;
            apart || penetration_depth(&moving, s) <= PENETRATION_TOL
        })
    }

    /// Touching (within `tol` along `action`) or interpenetrating.
    pub fn in_contact(&self, p: &Vec2, action: &Action, tol: f64) -> bool {
        match self.predict(p, action, tol) {
            Ok(pred) => pred.pair.is_some(),
            Err(_) => true,
        }
    }

    /// Hypothesis after the moving body travels `d`.
    pub fn advance(&self, p: &Vec2, d: &Vec2) -> Vec2 {
        match self.frame {
            BeliefFrame::Relative => p + d,
            BeliefFrame::Absolute => *p,
        }
    }

    /// Hypothesis whose relative configuration differs from `p` by the
    /// moving body being displaced `s` further, with the model held fixed.
    pub fn relative_shift(&self, p: &Vec2, s: &Vec2) -> Vec2 {
        p + s * self.sign()
    }

    /// All contours that can appear on the environment side of a pair.
    pub fn pair_env(&self) -> Vec<Contour> {
        let mut v = self.env.clone();
        if self.frame == BeliefFrame::Absolute {
            v.extend(self.statics.iter().cloned());
        }
        v
    }
}

/// `n` particles drawn uniformly in `region` by rejection sampling.
pub fn init_particles(region: &Contour, n: usize, seed: u64) -> Result<ParticleSet, ExplorationError> {
    let mut rng = crate::rng::stream(seed, crate::rng::BELIEF_INIT);
    init_particles_with(region, n, &mut rng, |_| true)
}

/// Rejection sampling in `region`, also rejecting points `accept` refuses.
pub fn init_particles_with<R: Rng + ?Sized>(
    region: &Contour,
    n: usize,
    rng: &mut R,
    accept: impl Fn(&Vec2) -> bool,
) -> Result<ParticleSet, ExplorationError> {
    if n == 0 {
        return Err(ExplorationError::NoParticles);
    }
    let (lo, hi) = region.bounds();
    let mut pts = Vec::with_capacity(n);
    let budget = 2000 * n;
    let mut tries = 0;
    while pts.len() < n {
        tries += 1;
        if tries > budget {
            return Err(ExplorationError::InfeasiblePrior);
        }
        let p = Vec2::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        if region.contains(&p) && accept(&p) {
            pts.push(p);
        }
    }
    Ok(ParticleSet::uniform(pts, 0))
}

/// Particles whose weight exceeds `w_thr_factor / len`.
pub fn detect_peaks(ps: &ParticleSet, w_thr_factor: f64) -> Vec<Particle> {
    let thr = w_thr_factor / ps.len().max(1) as f64;
    ps.particles.iter().filter(|p| p.weight > thr).copied().collect()
}

/// Share of the belief mass the peaks must carry to stand for the belief.
pub const PEAK_MASS: f64 = 0.8;

/// Peaks, or every particle when the peaks carry too little mass.
pub fn belief_support(ps: &ParticleSet, w_thr_factor: f64) -> Vec<Particle> {
    let peaks = detect_peaks(ps, w_thr_factor);
    let mass: f64 = peaks.iter().map(|p| p.weight).sum();
    let total: f64 = ps.particles.iter().map(|p| p.weight).sum();
    if peaks.is_empty() || mass < PEAK_MASS * total {
        ps.particles.clone()
    } else {
        peaks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InformationGain {
    pub best: usize,
    pub scores: Vec<f64>,
}

/// Scores each action by `α1·H(Z_a) + α2·Var(D_a)/max_dist²` over the
/// given particles and returns the best; ties go to the earlier action.
pub fn evaluate_information_gain(
    particles: &[Particle],
    actions: &[Action],
    model: &ContactModel,
    alpha1: f64,
    alpha2: f64,
    max_dist: f64,
) -> Result<InformationGain, ExplorationError> {
    if actions.is_empty() {
        return Err(ExplorationError::NoActions);
    }
    let mut scores = Vec::with_capacity(actions.len());
    for a in actions {
        let mut labels: BTreeMap<Option<ContactPair>, f64> = BTreeMap::new();
        let mut dist = Vec::with_capacity(particles.len());
        for p in particles {
            if p.weight <= 0.0 {
                continue;
            }
            if let Ok(pred) = model.predict(&p.pose, a, max_dist) {
                *labels.entry(pred.pair).or_default() += p.weight;
                dist.push((pred.distance, p.weight));
            }
        }
        let total: f64 = labels.values().sum();
        if total <= 0.0 {
            scores.push(f64::NEG_INFINITY);
            continue;
        }
        let entropy: f64 = labels
            .values()
            .map(|w| w / total)
            .filter(|q| *q > 0.0)
            .map(|q| -q * q.ln())
            .sum();
        let mean: f64 = dist.iter().map(|(d, w)| d * w).sum::<f64>() / total;
        let var: f64 = dist.iter().map(|(d, w)| w * (d - mean).powi(2)).sum::<f64>() / total;
        scores.push(alpha1 * entropy + alpha2 * var / (max_dist * max_dist));
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] + 1e-12 {
            best = i;
        }
    }
    Ok(InformationGain { best, scores })
}

/// Edge pairs consistent with the measured force: the planar force
/// direction points along the environment normal and against the object
/// normal (each within the force cone), and the normals are antiparallel.
pub fn select_contact_pairs(
    net_f: &Vec3,
    env: &[Contour],
    obj: &Contour,
) -> Result<Vec<ContactPair>, ExplorationError> {
    let mag = net_f.norm();
    if mag <= F_MIN {
        return Err(ExplorationError::BelowThreshold(mag));
    }
    let planar = Vec2::new(net_f.x, net_f.y);
    if planar.norm() <= F_MIN {
        return Err(ExplorationError::BelowThreshold(planar.norm()));
    }
    let f = planar.normalize();
    let mut out = Vec::new();
    for c in env {
        for (i, e) in c.edges().iter().enumerate() {
            if f.dot(&e.normal) <= FORCE_CONE_COS {
                continue;
            }
            for (j, o) in obj.edges().iter().enumerate() {
                if f.dot(&o.normal) >= -FORCE_CONE_COS {
                    continue;
                }
                if ContactPair::normals_antiparallel(&e.normal, &o.normal) {
                    out.push(ContactPair::new(c.id(), i, obj.id(), j));
                }
            }
        }
    }
    if out.is_empty() {
        return Err(ExplorationError::UnmodeledContact);
    }
    Ok(out)
}

/// Survivors of a pruning step and their predicted contact distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Pruned {
    pub set: ParticleSet,
    pub predicted: Vec<f64>,
}

/// Keeps particles predicting one of `pairs` at a distance within
/// `delta_d` of the observed travel. Positions are those at the start of
/// the move.
pub fn prune_particles(
    ps: &ParticleSet,
    pairs: &[ContactPair],
    contact_distance: f64,
    action: &Action,
    model: &ContactModel,
    delta_d: f64,
) -> Result<Pruned, ExplorationError> {
    prune_particles_by_force(ps, pairs, None, contact_distance, action, model, delta_d)
}

/// [`prune_particles`] that also keeps any predicted contact whose normal
/// lies within the force cone of the unit planar force `force_dir`. This
/// admits vertex contacts, whose edges are not antiparallel.
pub fn prune_particles_by_force(
    ps: &ParticleSet,
    pairs: &[ContactPair],
    force_dir: Option<Vec2>,
    contact_distance: f64,
    action: &Action,
    model: &ContactModel,
    delta_d: f64,
) -> Result<Pruned, ExplorationError> {
    let horizon = contact_distance + delta_d;
    let mut kept = Vec::new();
    let mut predicted = Vec::new();
    for p in &ps.particles {
        let Ok(pred) = model.predict(&p.pose, action, horizon) else {
            continue;
        };
        let (Some(pair), Some(normal)) = (pred.pair, pred.normal) else {
            continue;
        };
        if (pred.distance - contact_distance).abs() > delta_d {
            continue;
        }
        if pairs.contains(&pair) || force_dir.is_some_and(|f| normal.dot(&f) > FORCE_CONE_COS) {
            kept.push(*p);
            predicted.push(pred.distance);
        }
    }
    finish_prune(ps, kept, predicted)
}

/// Pruning after a move that ended without contact: drops particles that
/// would have stopped more than `delta_d` short of the travel.
pub fn prune_no_contact(
    ps: &ParticleSet,
    traveled: f64,
    action: &Action,
    model: &ContactModel,
    delta_d: f64,
) -> Result<Pruned, ExplorationError> {
    let mut kept = Vec::new();
    let mut predicted = Vec::new();
    for p in &ps.particles {
        let Ok(pred) = model.predict(&p.pose, action, traveled) else {
            continue;
        };
        if pred.pair.is_none() || pred.distance >= traveled - delta_d {
            kept.push(*p);
            predicted.push(pred.distance);
        }
    }
    finish_prune(ps, kept, predicted)
}

fn finish_prune(ps: &ParticleSet, kept: Vec<Particle>, predicted: Vec<f64>) -> Result<Pruned, ExplorationError> {
    if kept.is_empty() {
        return Err(ExplorationError::BeliefCollapse);
    }
    let mut set = ParticleSet {
        particles: kept,
        time_index: ps.time_index,
    };
    set.normalize()?;
    Ok(Pruned { set, predicted })
}

/// Re-weights particles along the executed trajectory.
///
/// `obs[t-1]` is the observation after step `t` of `T = obs.len()`; the
/// last one carries the total travel `D`. Each particle (at its post-move
/// hypothesis) is moved back by `(T−t)/T·D`, contact is predicted there
/// within `tol`, and every disagreement with the observation multiplies
/// the weight by `gamma`.
pub fn backtrack_weight_update(
    ps: &ParticleSet,
    obs: &[ContactObservation],
    action: &Action,
    model: &ContactModel,
    gamma: f64,
    tol: f64,
) -> Result<ParticleSet, ExplorationError> {
    let mut out = ps.clone();
    let Some(last) = obs.last() else {
        return Ok(out);
    };
    let big_t = obs.len() as f64;
    let d = last.traveled;
    for p in &mut out.particles {
        let mut w = p.weight;
        for (k, o) in obs.iter().enumerate() {
            let t = (k + 1) as f64;
            let back = (big_t - t) / big_t * d;
            let q = model.relative_shift(&p.pose, &(-action.direction * back));
            if model.in_contact(&q, action, tol) != o.is_contact() {
                w *= gamma;
            }
        }
        p.weight = w;
    }
    out.time_index += 1;
    out.normalize()?;
    Ok(out)
}

/// Tops the set up to `n_target` with weight-proportional resamples
/// jittered by `N(0, sigma²)`; survivors are kept and all weights reset.
pub fn replenish<R: Rng + ?Sized>(
    ps: &ParticleSet,
    n_target: usize,
    sigma: f64,
    rng: &mut R,
    accept: impl Fn(&Vec2) -> bool,
) -> Result<ParticleSet, ExplorationError> {
    if ps.is_empty() {
        return Err(ExplorationError::BeliefCollapse);
    }
    let weights: Vec<f64> = ps.particles.iter().map(|p| p.weight.max(0.0)).collect();
    let index = WeightedIndex::new(&weights).map_err(|_| ExplorationError::BeliefCollapse)?;
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    let mut pts = ps.positions();
    while pts.len() < n_target {
        let base = ps.particles[index.sample(rng)].pose;
        let mut chosen = base;
        for _ in 0..20 {
            let cand = base + Vec2::new(noise.sample(rng), noise.sample(rng));
            if accept(&cand) {
                chosen = cand;
                break;
            }
        }
        pts.push(chosen);
    }
    Ok(ParticleSet::uniform(pts, ps.time_index))
}

/// Archimedean spiral `r = pitch·φ/2π` around `center`, sampled every
/// π/8 and densified wherever consecutive points would be more than one
/// pitch apart.
pub fn spiral_search(center: &Vec2, pitch: f64, max_radius: f64) -> Vec<Vec2> {
    assert!(pitch > 0.0, "spiral pitch must be positive");
    let at = |phi: f64| {
        let r = pitch * phi / (2.0 * PI);
        center + Vec2::new(r * phi.cos(), r * phi.sin())
    };
    let mut out = vec![*center];
    let dphi = PI / 8.0;
    let mut k = 1;
    loop {
        let phi = k as f64 * dphi;
        if pitch * phi / (2.0 * PI) > max_radius + 1e-12 {
            break;
        }
        let prev_phi = (k - 1) as f64 * dphi;
        let gap = (at(phi) - at(prev_phi)).norm();
        let pieces = (gap / pitch).ceil().max(1.0) as usize;
        for s in 1..pieces {
            out.push(at(prev_phi + dphi * s as f64 / pieces as f64));
        }
        out.push(at(phi));
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ContourId;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn square(id: u32, cx: f64, cy: f64, s: f64) -> Contour {
        Contour::rectangle(ContourId(id), Vec2::new(cx, cy), s, s).unwrap()
    }

    #[test]
    fn init_inside_with_uniform_weights() {
        let region = square(0, 0.0, 0.0, 60.0);
        let ps = init_particles(&region, 100, 3).unwrap();
        assert_eq!(ps.len(), 100);
        assert!(ps.particles.iter().all(|p| region.contains(&p.pose)));
        assert!(ps.particles.iter().all(|p| (p.weight - 0.01).abs() < 1e-15));
        assert_eq!(ps, init_particles(&region, 100, 3).unwrap());
        assert!(matches!(
            init_particles(&region, 0, 3),
            Err(ExplorationError::NoParticles)
        ));
    }

    #[test]
    fn support_falls_back_when_peaks_carry_little_mass() {
        let mut ps = ParticleSet::uniform((0..10).map(|i| Vec2::new(i as f64, 0.0)).collect(), 0);
        ps.particles[0].weight = 0.5;
        ps.normalize().unwrap();
        assert_eq!(belief_support(&ps, 1.0).len(), 10);
        ps.particles[0].weight = 20.0;
        ps.normalize().unwrap();
        assert_eq!(belief_support(&ps, 1.0).len(), 1);
    }

    #[test]
    fn goal_path_threads_a_gap() {
        let env = vec![
            Contour::rectangle(ContourId(1), Vec2::new(-25.0, 20.0), 40.0, 4.0).unwrap(),
            Contour::rectangle(ContourId(2), Vec2::new(25.0, 20.0), 40.0, 4.0).unwrap(),
        ];
        let model = ContactModel::relative(env, square(100, 0.0, 0.0, 6.0));
        let (from, to) = (Vec2::new(-20.0, 40.0), Vec2::new(20.0, 0.0));
        let path = plan_goal_path(&model, &from, &to);
        assert_eq!(path.last(), Some(&to));
        let mut at = from;
        for wp in &path {
            let d = wp - at;
            let p = model.predict(&at, &Action::new(d, "leg"), d.norm()).unwrap();
            assert!(p.pair.is_none(), "leg {at:?} -> {wp:?} blocked");
            at = *wp;
        }
        assert!(path.len() >= 2);
        assert_eq!(plan_goal_path(&model, &Vec2::new(-20.0, 10.0), &to), vec![to]);
    }

    #[test]
    fn peaks_examples() {
        let mut ps = ParticleSet::uniform(vec![Vec2::zeros(); 100], 0);
        assert!(detect_peaks(&ps, 1.0).is_empty());
        assert_eq!(detect_peaks(&ps, 0.5).len(), 100);
        ps.particles[0].weight = 0.5;
        ps.normalize().unwrap();
        assert_eq!(detect_peaks(&ps, 1.0).len(), 1);
    }

    #[test]
    fn predict_examples() {
        let wall = Contour::rectangle(ContourId(1), Vec2::new(55.0, 0.0), 10.0, 100.0).unwrap();
        let obj = square(9, 0.0, 0.0, 10.0);
        let east = Action::new(Vec2::new(1.0, 0.0), "E");
        let west = Action::new(Vec2::new(-1.0, 0.0), "W");
        let p = predict_contact(&Vec2::new(5.0, 0.0), &east, std::slice::from_ref(&wall), &obj, 100.0).unwrap();
        assert_abs_diff_eq!(p.distance, 40.0, epsilon = 1e-9);
        assert_eq!(p.pair.unwrap().env_edge.contour, ContourId(1));
        let p = predict_contact(&Vec2::new(5.0, 0.0), &west, &[wall], &obj, 100.0).unwrap();
        assert_eq!(p.pair, None);
        assert_eq!(p.distance, 100.0);
    }

    #[test]
    fn ig_prefers_ambiguous_direction() {
        // two boxes side by side; particles left of each: east probes hit
        // different contours, north probes hit nothing
        let env = vec![square(1, 20.0, 0.0, 10.0), square(2, 60.0, 0.0, 10.0)];
        let obj = square(9, 0.0, 0.0, 4.0);
        let model = ContactModel::relative(env, obj);
        let ps = ParticleSet::uniform(vec![Vec2::new(0.0, 0.0), Vec2::new(40.0, 0.0)], 0);
        let actions = vec![
            Action::new(Vec2::new(0.0, 1.0), "N"),
            Action::new(Vec2::new(1.0, 0.0), "E"),
        ];
        let ig = evaluate_information_gain(&ps.particles, &actions, &model, 1.0, 1.0, 50.0).unwrap();
        assert_eq!(ig.best, 1);
        assert_abs_diff_eq!(ig.scores[1], 2f64.ln(), epsilon = 1e-12);
        // single particle: all scores zero, first action wins
        let one = [ps.particles[0]];
        let ig = evaluate_information_gain(&one, &actions, &model, 1.0, 1.0, 50.0).unwrap();
        assert_eq!(ig.best, 0);
    }

    #[test]
    fn select_pairs_examples() {
        let wall = Contour::rectangle(ContourId(1), Vec2::new(55.0, 0.0), 10.0, 100.0).unwrap();
        let obj = square(9, 0.0, 0.0, 10.0);
        // force on the object points back along -x, the wall face normal
        let pairs = select_contact_pairs(&Vec3::new(-2.0, 0.0, 0.0), std::slice::from_ref(&wall), &obj).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(wall.edges()[pairs[0].env_edge.edge].normal, Vec2::new(-1.0, 0.0));
        assert_eq!(obj.edges()[pairs[0].obj_edge.edge].normal, Vec2::new(1.0, 0.0));
        assert!(matches!(
            select_contact_pairs(&Vec3::new(0.01, 0.0, 0.0), &[wall], &obj),
            Err(ExplorationError::BelowThreshold(_))
        ));
    }

    fn wall_model() -> ContactModel {
        let wall = Contour::rectangle(ContourId(1), Vec2::new(60.0, 0.0), 20.0, 100.0).unwrap();
        ContactModel::relative(vec![wall], square(9, 0.0, 0.0, 10.0))
    }

    #[test]
    fn prune_distance_gate() {
        let model = wall_model();
        let east = Action::new(Vec2::new(1.0, 0.0), "E");
        let ps = ParticleSet::uniform(vec![Vec2::new(5.0, 0.0), Vec2::new(35.0, 0.0)], 0);
        let pairs = select_contact_pairs(&Vec3::new(-2.0, 0.0, 0.0), &model.env, &model.obj).unwrap();
        let out = prune_particles(&ps, &pairs, 40.0, &east, &model, 3.0).unwrap();
        assert_eq!(out.set.len(), 1);
        assert_eq!(out.set.particles[0].pose, Vec2::new(5.0, 0.0));
        assert_abs_diff_eq!(out.set.particles[0].weight, 1.0);
    }

    #[test]
    fn vertex_contact_kept_by_force_direction() {
        // chamfered corner against a square post: no antiparallel pair exists
        let tri = Contour::new(
            ContourId(100),
            vec![Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), Vec2::new(0.0, 4.0)],
        )
        .unwrap();
        let model = ContactModel::relative(vec![square(1, 20.0, 4.0, 4.0)], tri);
        let east = Action::new(Vec2::new(1.0, 0.0), "E");
        let ps = ParticleSet::uniform(vec![Vec2::zeros()], 0);
        let f = Vec2::new(-1.0, -1.0).normalize();
        let net = Vec3::new(f.x, f.y, 0.0) * 2.0;
        assert!(matches!(
            select_contact_pairs(&net, &model.env, &model.obj),
            Err(ExplorationError::UnmodeledContact)
        ));
        assert!(prune_particles(&ps, &[], 16.0, &east, &model, 3.0).is_err());
        let out = prune_particles_by_force(&ps, &[], Some(f), 16.0, &east, &model, 3.0).unwrap();
        assert_eq!(out.set.len(), 1);
        assert_abs_diff_eq!(out.predicted[0], 16.0, epsilon = 1e-9);
        let wrong = Vec2::new(-1.0, 1.0).normalize();
        assert!(prune_particles_by_force(&ps, &[], Some(wrong), 16.0, &east, &model, 3.0).is_err());
    }

    #[test]
    fn backtrack_premature_contact() {
        let model = wall_model();
        let east = Action::new(Vec2::new(1.0, 0.0), "E");
        // 4-step free move of 40 mm; particle B (post-move) would have
        // touched the wall halfway and now sits inside it
        let obs: Vec<ContactObservation> = (1..=4)
            .map(|t| ContactObservation {
                time: t,
                net_force: Vec3::zeros(),
                traveled: 10.0 * t as f64,
                candidate_pairs: vec![],
            })
            .collect();
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(65.0, 0.0);
        let ps = ParticleSet::uniform(vec![a, b], 0);
        let out = backtrack_weight_update(&ps, &obs, &east, &model, 0.1, 0.5).unwrap();
        // steps 2, 3, 4 mismatch for B (backtracked poses 45, 55, 65 touch)
        let ratio = out.particles[1].weight / out.particles[0].weight;
        assert_abs_diff_eq!(ratio, 1e-3, epsilon = 1e-12);
        let same = backtrack_weight_update(&ps, &obs, &east, &model, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(same.particles[0].weight, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn replenish_examples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let seeds: Vec<Vec2> = (0..10).map(|i| Vec2::new(i as f64 * 10.0, 0.0)).collect();
        let ps = ParticleSet::uniform(seeds.clone(), 0);
        let out = replenish(&ps, 100, 0.0, &mut rng, |_| true).unwrap();
        assert_eq!(out.len(), 100);
        assert!(out.particles.iter().all(|p| seeds.contains(&p.pose)));
        let out = replenish(&ps, 100, 2.0, &mut rng, |_| true).unwrap();
        assert!(out
            .particles
            .iter()
            .all(|p| seeds.iter().any(|s| (s - p.pose).norm() < 12.0)));
        let empty = ParticleSet::uniform(vec![], 0);
        assert!(replenish(&empty, 10, 1.0, &mut rng, |_| true).is_err());
    }

    #[test]
    fn spiral_examples() {
        let c = Vec2::new(3.0, -2.0);
        assert_eq!(spiral_search(&c, 1.0, 0.0), vec![c]);
        let pts = spiral_search(&Vec2::zeros(), 1.0, 5.0);
        assert_eq!(pts[0], Vec2::zeros());
        // the sample at φ = 2π lies at radius one pitch on +x
        assert!(pts.iter().any(|p| (p - Vec2::new(1.0, 0.0)).norm() < 1e-9));
        for w in pts.windows(2) {
            assert!((w[1] - w[0]).norm() <= 1.0 + 1e-9);
        }
        assert!(pts.iter().all(|p| p.norm() <= 5.0 + 1e-9));
    }
}
