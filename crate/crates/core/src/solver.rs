//! Primal-dual splitting for the generalized Hopf-Lax formula.
//!
//! For a query configuration `x` and horizon `t`, the value
//!
//! ```text
//! u(x, t) = min_{x₀..x_N} max_{p₁..p_N}  g(x₀) + Σ_j ⟨p_j, x_j − x_{j−1}⟩ − δ·O(x_j, t_j)·H(x_j, p_j)
//! ```
//!
//! is resolved over discrete paths with `x_N = x`, `g = |· − goal|`, and
//! `t_j = jδ`. Each sweep updates every costate by a proximal step, the free
//! endpoint `x₀` by a proximal step on `g`, the interior states by (inexact)
//! proximal steps on `−H`, and then over-relaxes the states.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::hamiltonian::{goal_distance, DescentParams, ProxContext, VehicleModel};
use crate::obstacles::ObstacleSet;

/// Iteration interval of the non-finite guard.
const FINITE_CHECK_INTERVAL: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub sigma: f64,
    pub tau: f64,
    pub kappa: f64,
    pub delta: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub eta: f64,
    pub n_gd: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            sigma: 1.0,
            tau: 0.2,
            kappa: 1.0,
            delta: 0.1,
            tol: 1e-3,
            max_iters: 100_000,
            eta: 0.03,
            n_gd: 3,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        SolverConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        ProxContext::new(self.delta, self.sigma, self.tau, 1.0)?;
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(PlanError::InvalidParameter(format!(
                "kappa must lie in [0, 1], got {}",
                self.kappa
            )));
        }
        if !(self.tol > 0.0) {
            return Err(PlanError::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if !(self.eta > 0.0) {
            return Err(PlanError::InvalidParameter(format!(
                "descent rate must be positive, got {}",
                self.eta
            )));
        }
        if self.max_iters == 0 {
            return Err(PlanError::InvalidParameter(
                "max_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn descent(&self) -> DescentParams {
        DescentParams {
            eta: self.eta,
            steps: self.n_gd,
        }
    }

    /// Number of path steps for a horizon, `round(t / δ)`.
    pub fn steps_for(&self, t: f64) -> usize {
        (t / self.delta).round().max(0.0) as usize
    }
}

/// Discrete state, costate and relaxed paths on a uniform grid.
///
/// Index `0` is the free endpoint (compared against the goal) and index `N`
/// is pinned to the query configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteTrajectory {
    pub states: Vec<Vec<f64>>,
    pub costates: Vec<Vec<f64>>,
    pub relaxed: Vec<Vec<f64>>,
    pub delta: f64,
}

impl DiscreteTrajectory {
    /// Number of steps `N`.
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.delta
    }

    /// Equation time of node `j`.
    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.delta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub value: f64,
    pub trajectory: DiscreteTrajectory,
    pub iterations: usize,
    pub converged: bool,
    pub change_history: Vec<f64>,
    pub wall_time: f64,
    pub seed: u64,
}

impl SolveResult {
    /// `|x₀ − goal|`, the distance left at the end of the planned path.
    pub fn terminal_distance(&self, goal: &[f64]) -> f64 {
        goal_distance(&self.trajectory.states[0], goal)
    }

    /// Smallest smoothed free-space indicator over the path nodes.
    pub fn min_clearance(&self, model: &VehicleModel, obs: &ObstacleSet) -> f64 {
        let ds = model.spatial_dim();
        self.trajectory
            .states
            .iter()
            .enumerate()
            .map(|(j, x)| obs.smooth_indicator(&x[..ds], self.trajectory.time(j)))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Hopf-Lax objective evaluated on a stored trajectory.
pub fn path_value(
    model: &VehicleModel,
    obs: &ObstacleSet,
    goal: &[f64],
    traj: &DiscreteTrajectory,
) -> f64 {
    let ds = model.spatial_dim();
    let mut u = goal_distance(&traj.states[0], goal);
    for j in 1..traj.states.len() {
        let x = &traj.states[j];
        let prev = &traj.states[j - 1];
        let p = &traj.costates[j];
        let inner: f64 = p
            .iter()
            .zip(x.iter().zip(prev))
            .map(|(p, (a, b))| p * (a - b))
            .sum();
        let o = obs.smooth_indicator(&x[..ds], traj.time(j));
        u += inner - traj.delta * o * model.hamiltonian(x, p);
    }
    u
}

fn sup_change(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

fn all_finite(rows: &[Vec<f64>]) -> bool {
    rows.iter().all(|r| r.iter().all(|v| v.is_finite()))
}

fn check_inputs(
    model: &VehicleModel,
    obs: &ObstacleSet,
    query: &[f64],
    goal: &[f64],
    t: f64,
    cfg: &SolverConfig,
) -> Result<usize> {
    model.check_dim("query", query)?;
    model.check_dim("goal", goal)?;
    if query.iter().chain(goal).any(|v| !v.is_finite()) {
        return Err(PlanError::InvalidParameter(
            "query and goal must be finite".into(),
        ));
    }
    if !obs.is_empty() && obs.spatial_dim() != model.spatial_dim() {
        return Err(PlanError::DimensionMismatch {
            what: "obstacle set",
            expected: model.spatial_dim(),
            got: obs.spatial_dim(),
        });
    }
    cfg.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(PlanError::InvalidParameter(format!(
            "horizon must be positive, got {t}"
        )));
    }
    let n = cfg.steps_for(t);
    if n < 1 {
        return Err(PlanError::InvalidParameter(format!(
            "horizon {t} is shorter than half a time step {}",
            cfg.delta
        )));
    }
    Ok(n)
}

/// Seeded random initial paths: states uniform in the box spanned by query
/// and goal inflated by one unit, costates uniform in `[-1, 1]`.
fn initial_paths(
    query: &[f64],
    goal: &[f64],
    n: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = query.len();
    let lo: Vec<f64> = query
        .iter()
        .zip(goal)
        .map(|(a, b)| a.min(*b) - 1.0)
        .collect();
    let hi: Vec<f64> = query
        .iter()
        .zip(goal)
        .map(|(a, b)| a.max(*b) + 1.0)
        .collect();
    let mut states = Vec::with_capacity(n + 1);
    for _ in 0..n {
        states.push((0..d).map(|i| rng.gen_range(lo[i]..hi[i])).collect());
    }
    states.push(query.to_vec());
    let mut costates = Vec::with_capacity(n + 1);
    costates.push(vec![0.0; d]);
    for _ in 0..n {
        costates.push((0..d).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    (states, costates)
}

/// Resolves `u(query, t)` for the obstacle-modified level-set equation with
/// initial cost `|· − goal|`.
///
/// Returns the result with `converged = false` if `max_iters` sweeps pass
/// without the sup-norm change in `x` and `p` dropping below `tol`.
pub fn solve(
    model: &VehicleModel,
    obs: &ObstacleSet,
    query: &[f64],
    goal: &[f64],
    t: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let n = check_inputs(model, obs, query, goal, t, cfg)?;
    let started = Instant::now();
    let d = model.state_dim();
    let ds = model.spatial_dim();
    let angular = model.angular_range();
    let base_ctx = ProxContext::new(cfg.delta, cfg.sigma, cfg.tau, 1.0)?;
    let descent = cfg.descent();
    let time = |j: usize| j as f64 * cfg.delta;

    let (mut x, mut p) = initial_paths(query, goal, n, cfg.seed);
    let mut z = x.clone();
    let mut x_next = x.clone();
    let mut p_next = p.clone();
    let mut beta = vec![0.0; d];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for k in 0..cfg.max_iters {
        iterations = k + 1;

        p_next[0].iter_mut().for_each(|v| *v = 0.0);
        for j in 1..=n {
            for i in 0..d {
                beta[i] = p[j][i] + cfg.sigma * (z[j][i] - z[j - 1][i]);
            }
            let ctx = base_ctx.at(obs.smooth_indicator(&x[j][..ds], time(j)));
            model.prox_costate(&x[j], &beta, &ctx, &mut p_next[j])?;
        }

        model.update_x0(&x[0], &p_next[1], goal, cfg.tau, &mut x_next[0]);

        for j in 1..n {
            let ctx = base_ctx.at(obs.smooth_indicator(&x[j][..ds], time(j)));
            let (pj, pj1) = (&p_next[j], &p_next[j + 1]);
            let row = &mut x_next[j];
            model.update_spatial(&x[j], pj, pj1, &ctx, &descent, obs, time(j), &mut row[..ds]);
            model.update_angular(&x[j], pj, pj1, &ctx, &descent, &mut row[angular.clone()]);
        }
        x_next[n].copy_from_slice(query);

        for j in 0..=n {
            for i in 0..d {
                z[j][i] = x_next[j][i] + cfg.kappa * (x_next[j][i] - x[j][i]);
            }
        }

        let change = sup_change(&x_next, &x).max(sup_change(&p_next, &p));
        std::mem::swap(&mut x, &mut x_next);
        std::mem::swap(&mut p, &mut p_next);
        history.push(change);

        if !change.is_finite()
            || ((k + 1) % FINITE_CHECK_INTERVAL == 0 && !(all_finite(&x) && all_finite(&p)))
        {
            return Err(PlanError::Diverged { iteration: k + 1 });
        }
        if change < cfg.tol {
            converged = true;
            break;
        }
    }
    if !(all_finite(&x) && all_finite(&p)) {
        return Err(PlanError::Diverged {
            iteration: iterations,
        });
    }

    let trajectory = DiscreteTrajectory {
        states: x,
        costates: p,
        relaxed: z,
        delta: cfg.delta,
    };
    let value = path_value(model, obs, goal, &trajectory);
    Ok(SolveResult {
        value,
        trajectory,
        iterations,
        converged,
        change_history: history,
        wall_time: started.elapsed().as_secs_f64(),
        seed: cfg.seed,
    })
}

/// Strategy for the horizon search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonSearch {
    /// Bisection on the step count; assumes the reach predicate is monotone
    /// in the horizon (stationary obstacles).
    #[default]
    Bisection,
    /// Tries every step count from the low end upward. Suitable for moving
    /// obstacles, where monotonicity is not guaranteed.
    LinearScan,
}

/// Smallest horizon on the `δ`-grid of `[t_lo, t_hi]` for which the solver
/// converges with value at most `reach_tol`.
#[allow(clippy::too_many_arguments)]
pub fn find_min_horizon(
    model: &VehicleModel,
    obs: &ObstacleSet,
    query: &[f64],
    goal: &[f64],
    cfg: &SolverConfig,
    t_lo: f64,
    t_hi: f64,
    reach_tol: f64,
    mode: HorizonSearch,
) -> Result<f64> {
    if !(t_lo > 0.0 && t_lo < t_hi) {
        return Err(PlanError::InvalidParameter(format!(
            "horizon bracket must satisfy 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]"
        )));
    }
    let lo_steps = cfg.steps_for(t_lo).max(1);
    let hi_steps = cfg.steps_for(t_hi).max(lo_steps);
    let horizon = |steps: usize| steps as f64 * cfg.delta;
    let probe = |steps: usize| -> Result<(bool, f64)> {
        let r = solve(model, obs, query, goal, horizon(steps), cfg)?;
        Ok((r.converged && r.value <= reach_tol, r.value))
    };

    match mode {
        HorizonSearch::LinearScan => {
            let mut last = f64::NAN;
            for steps in lo_steps..=hi_steps {
                let (ok, value) = probe(steps)?;
                if ok {
                    return Ok(horizon(steps));
                }
                last = value;
            }
            Err(PlanError::NotReachable {
                t_hi,
                value: last,
                reach_tol,
            })
        }
        HorizonSearch::Bisection => {
            let (ok_hi, value_hi) = probe(hi_steps)?;
            if !ok_hi {
                return Err(PlanError::NotReachable {
                    t_hi,
                    value: value_hi,
                    reach_tol,
                });
            }
            if probe(lo_steps)?.0 {
                return Ok(horizon(lo_steps));
            }
            let (mut bad, mut good) = (lo_steps, hi_steps);
            while good - bad > 1 {
                let mid = bad + (good - bad) / 2;
                if probe(mid)?.0 {
                    good = mid;
                } else {
                    bad = mid;
                }
            }
            Ok(horizon(good))
        }
    }
}

/// A configuration stamped with physical time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedState {
    pub time: f64,
    pub state: Vec<f64>,
}

/// Re-labels the solved path in physical time: the pinned query (index `N`)
/// is the start at time `0` and index `0` is reached at time `T = Nδ`.
pub fn extract_physical_path(result: &SolveResult) -> Vec<TimedState> {
    let traj = &result.trajectory;
    let n = traj.steps();
    (0..=n)
        .rev()
        .map(|j| TimedState {
            time: (n - j) as f64 * traj.delta,
            state: traj.states[j].clone(),
        })
        .collect()
}
