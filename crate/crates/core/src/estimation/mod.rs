//! MAP estimation over the gripper and grasped-object pose chains, the
//! environment region carried as particle support, and the alignment test
//! that ends a task.

mod region;

pub use region::{convex_hull, env_region_update, EnvRegion};

use crate::geometry::{wrap_angle, Pose2};
use crate::tactile::Vec3;
use nalgebra::{DMatrix, DVector, Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use thiserror::Error;

/// Gripper pose standard deviation (x, y in mm; θ in rad).
pub const SIGMA_GRIPPER: [f64; 3] = [0.1, 0.1, 0.001];
/// Object pose standard deviation from marker registration.
pub const SIGMA_OBJECT: [f64; 3] = [0.3, 0.3, 0.003];

pub const MAX_ITERATIONS: usize = 50;
pub const STEP_TOL: f64 = 1e-8;
const MAX_HALVINGS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("no factor constrains {0}")]
    Unconstrained(String),
    #[error("normal equations are singular")]
    Singular,
    #[error("factor references {0}, outside the chain")]
    OutOfRange(StateVar),
    #[error("covariance must be positive definite, got sigma {0:?}")]
    BadCovariance([f64; 3]),
    #[error("belief collapsed: no environment hypothesis survives")]
    BeliefCollapse,
}

/// One unknown pose in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StateVar {
    Gripper(usize),
    Object(usize),
}

impl fmt::Display for StateVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateVar::Gripper(t) => write!(f, "g[{t}]"),
            StateVar::Object(t) => write!(f, "l[{t}]"),
        }
    }
}

/// Time-indexed gripper and object poses plus the environment region.
#[derive(Debug, Clone, PartialEq)]
pub struct StateChain {
    pub gripper: Vec<Pose2>,
    pub object: Vec<Pose2>,
    pub env_region: Vec<EnvRegion>,
    fixed: BTreeSet<StateVar>,
}

impl StateChain {
    pub fn new(gripper: Vec<Pose2>, object: Vec<Pose2>, env_region: Vec<EnvRegion>) -> Self {
        assert_eq!(gripper.len(), object.len(), "chains must share time indexing");
        Self {
            gripper,
            object,
            env_region,
            fixed: BTreeSet::new(),
        }
    }

    /// Chain of `len` identity poses with empty regions.
    pub fn identity(len: usize) -> Self {
        Self::new(
            vec![Pose2::identity(); len],
            vec![Pose2::identity(); len],
            vec![EnvRegion::default(); len],
        )
    }

    pub fn len(&self) -> usize {
        self.gripper.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gripper.is_empty()
    }

    /// Excludes `var` from the optimization; its value is held as given.
    pub fn fix(&mut self, var: StateVar) {
        self.fixed.insert(var);
    }

    pub fn is_fixed(&self, var: StateVar) -> bool {
        self.fixed.contains(&var)
    }

    pub fn get(&self, var: StateVar) -> Option<&Pose2> {
        match var {
            StateVar::Gripper(t) => self.gripper.get(t),
            StateVar::Object(t) => self.object.get(t),
        }
    }

    fn get_mut(&mut self, var: StateVar) -> &mut Pose2 {
        match var {
            StateVar::Gripper(t) => &mut self.gripper[t],
            StateVar::Object(t) => &mut self.object[t],
        }
    }

    fn free_vars(&self) -> Vec<StateVar> {
        let g = (0..self.len()).map(StateVar::Gripper);
        let l = (0..self.len()).map(StateVar::Object);
        g.chain(l).filter(|v| !self.fixed.contains(v)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Gripper,
    Object,
}

/// A Gaussian factor with diagonal covariance `diag(sigma²)`.
#[derive(Debug, Clone, PartialEq)]
pub enum GaussianFactor {
    /// Gripper pose against its commanded or encoder prior.
    GripperPrior { t: usize, prior: Pose2, sigma: [f64; 3] },
    /// Object pose against the gripper pose composed with the in-hand
    /// transform (gripper frame to object frame).
    ObjectFromGripper {
        t: usize,
        in_hand: Isometry3<f64>,
        sigma: [f64; 3],
    },
    /// Direct prior on the object pose.
    ObjectPrior { t: usize, prior: Pose2, sigma: [f64; 3] },
}

impl GaussianFactor {
    pub fn gripper_prior(t: usize, prior: Pose2) -> Self {
        Self::GripperPrior {
            t,
            prior,
            sigma: SIGMA_GRIPPER,
        }
    }

    pub fn object_from_gripper(t: usize, in_hand: Isometry3<f64>) -> Self {
        Self::ObjectFromGripper {
            t,
            in_hand,
            sigma: SIGMA_OBJECT,
        }
    }

    pub fn object_prior(t: usize, prior: Pose2) -> Self {
        Self::ObjectPrior {
            t,
            prior,
            sigma: SIGMA_OBJECT,
        }
    }

    pub fn kind(&self) -> FactorKind {
        match self {
            Self::GripperPrior { .. } => FactorKind::Gripper,
            _ => FactorKind::Object,
        }
    }

    pub fn sigma(&self) -> [f64; 3] {
        match self {
            Self::GripperPrior { sigma, .. }
            | Self::ObjectFromGripper { sigma, .. }
            | Self::ObjectPrior { sigma, .. } => *sigma,
        }
    }

    fn vars(&self) -> Vec<StateVar> {
        match *self {
            Self::GripperPrior { t, .. } => vec![StateVar::Gripper(t)],
            Self::ObjectFromGripper { t, .. } => vec![StateVar::Object(t), StateVar::Gripper(t)],
            Self::ObjectPrior { t, .. } => vec![StateVar::Object(t)],
        }
    }

    /// Unwhitened residual.
    pub fn residual(&self, chain: &StateChain) -> [f64; 3] {
        match self {
            Self::GripperPrior { t, prior, .. } => gripper_factor_residual(&chain.gripper[*t], prior),
            Self::ObjectFromGripper { t, in_hand, .. } => {
                object_factor_residual(&chain.object[*t], &chain.gripper[*t], in_hand)
            }
            Self::ObjectPrior { t, prior, .. } => chain.object[*t].minus(prior),
        }
    }

    fn whitened(&self, chain: &StateChain) -> [f64; 3] {
        let r = self.residual(chain);
        let s = self.sigma();
        [r[0] / s[0], r[1] / s[1], r[2] / s[2]]
    }
}

/// `g − prior` with the angle wrapped.
pub fn gripper_factor_residual(g: &Pose2, prior: &Pose2) -> [f64; 3] {
    g.minus(prior)
}

/// Planar pose as a 3-D isometry rotating about z.
pub fn pose_to_isometry(p: &Pose2) -> Isometry3<f64> {
    Isometry3::from_parts(
        Translation3::new(p.x, p.y, 0.0),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), p.theta),
    )
}

/// Projection of a 3-D isometry to the plane: x, y and yaw.
pub fn project_to_plane(iso: &Isometry3<f64>) -> Pose2 {
    let t = iso.translation.vector;
    let (_, _, yaw) = iso.rotation.euler_angles();
    Pose2::new(t.x, t.y, yaw)
}

/// `T^g_l = T^g_s · T^s_l`.
pub fn compose_in_hand(gripper_to_sensor: &Isometry3<f64>, sensor_to_object: &Isometry3<f64>) -> Isometry3<f64> {
    gripper_to_sensor * sensor_to_object
}

/// `l − proj(T^w_g · T^g_l)`, with `T^w_g` built from the planar `g`.
pub fn object_factor_residual(l: &Pose2, g: &Pose2, in_hand: &Isometry3<f64>) -> [f64; 3] {
    let predicted = project_to_plane(&(pose_to_isometry(g) * in_hand));
    l.minus(&predicted)
}

/// Per-iteration solver trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub cost: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub chain: StateChain,
    pub trace: Vec<IterationRecord>,
    pub converged: bool,
}

impl Solution {
    pub fn final_cost(&self) -> f64 {
        self.trace.last().map(|r| r.cost).unwrap_or(0.0)
    }

    /// Writes `iteration,cost,step_norm` rows.
    pub fn write_trace_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.trace {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Half the weighted sum of squared residuals.
pub fn total_cost(chain: &StateChain, factors: &[GaussianFactor]) -> f64 {
    0.5 * factors
        .iter()
        .map(|f| f.whitened(chain).iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
}

fn validate(chain: &StateChain, factors: &[GaussianFactor]) -> Result<Vec<StateVar>, EstimationError> {
    let mut touched = BTreeSet::new();
    for f in factors {
        let s = f.sigma();
        if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(EstimationError::BadCovariance(s));
        }
        for v in f.vars() {
            if chain.get(v).is_none() {
                return Err(EstimationError::OutOfRange(v));
            }
            touched.insert(v);
        }
    }
    let free = chain.free_vars();
    let loose: Vec<String> = free
        .iter()
        .filter(|v| !touched.contains(v))
        .map(|v| v.to_string())
        .collect();
    if !loose.is_empty() {
        return Err(EstimationError::Unconstrained(loose.join(", ")));
    }
    Ok(free)
}

fn stacked(chain: &StateChain, factors: &[GaussianFactor]) -> DVector<f64> {
    DVector::from_iterator(3 * factors.len(), factors.iter().flat_map(|f| f.residual(chain)))
}

fn inv_sigmas(factors: &[GaussianFactor]) -> DVector<f64> {
    DVector::from_iterator(
        3 * factors.len(),
        factors.iter().flat_map(|f| f.sigma().map(|s| 1.0 / s)),
    )
}

fn apply(chain: &mut StateChain, free: &[StateVar], dx: &DVector<f64>) {
    for (k, v) in free.iter().enumerate() {
        let p = chain.get_mut(*v);
        *p = Pose2::new(p.x + dx[3 * k], p.y + dx[3 * k + 1], p.theta + dx[3 * k + 2]);
    }
}

/// Damped Gauss–Newton on the weighted least-squares cost of `factors`.
///
/// Free variables are every pose not marked fixed. The Jacobian is formed
/// by central differences. A step that raises the cost is halved up to
/// eight times; if none helps, the solver stops.
pub fn solve_map(chain: &StateChain, factors: &[GaussianFactor]) -> Result<Solution, EstimationError> {
    let free = validate(chain, factors)?;
    let mut cur = chain.clone();
    let mut cost = total_cost(&cur, factors);
    let mut trace = vec![IterationRecord {
        iteration: 0,
        cost,
        step_norm: 0.0,
    }];
    if free.is_empty() || factors.is_empty() {
        return Ok(Solution {
            chain: cur,
            trace,
            converged: true,
        });
    }
    let n = 3 * free.len();
    let w = inv_sigmas(factors);
    let mut converged = false;
    for iteration in 1..=MAX_ITERATIONS {
        let r = stacked(&cur, factors).component_mul(&w);
        let mut jac = DMatrix::<f64>::zeros(r.len(), n);
        for col in 0..n {
            let h = 1e-6;
            let mut e = DVector::zeros(n);
            e[col] = h;
            let mut plus = cur.clone();
            apply(&mut plus, &free, &e);
            let mut minus = cur.clone();
            apply(&mut minus, &free, &(-&e));
            let mut d = stacked(&plus, factors) - stacked(&minus, factors);
            // residual components are angles for every third row
            for (i, v) in d.iter_mut().enumerate() {
                if i % 3 == 2 {
                    *v = wrap_angle(*v);
                }
            }
            jac.set_column(col, &(d.component_mul(&w) / (2.0 * h)));
        }
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let chol = jtj.cholesky().ok_or(EstimationError::Singular)?;
        let dx = -chol.solve(&jtr);
        if dx.iter().any(|v| !v.is_finite()) {
            return Err(EstimationError::Singular);
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let step = &dx * scale;
            let mut trial = cur.clone();
            apply(&mut trial, &free, &step);
            let c = total_cost(&trial, factors);
            if c <= cost {
                accepted = Some((trial, c, step.norm()));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, c, step_norm)) = accepted else {
            converged = true;
            break;
        };
        cur = next;
        cost = c;
        trace.push(IterationRecord {
            iteration,
            cost,
            step_norm,
        });
        log::debug!("gauss-newton iter {iteration}: cost {cost:.6e} step {step_norm:.3e}");
        if step_norm < STEP_TOL {
            converged = true;
            break;
        }
    }
    Ok(Solution {
        chain: cur,
        trace,
        converged,
    })
}

/// Thresholds of the alignment test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentThresholds {
    /// Lateral force bound, N.
    pub f_ali: f64,
    /// Goal distance bound, mm.
    pub d_ali: f64,
}

impl Default for AlignmentThresholds {
    fn default() -> Self {
        Self { f_ali: 0.3, d_ali: 1.0 }
    }
}

/// True when both lateral force components and the goal distance are
/// strictly below their thresholds.
pub fn alignment_check(net_f: &Vec3, distance_to_goal: f64, th: &AlignmentThresholds) -> bool {
    net_f.x.abs() < th.f_ali && net_f.y.abs() < th.f_ali && distance_to_goal < th.d_ali
}
