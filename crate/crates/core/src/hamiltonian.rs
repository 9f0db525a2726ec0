//! Vehicle models as Hamiltonian kernels.
//!
//! Every model exposes the pieces the splitting iteration needs: evaluation
//! of `H(x, p)`, the proximal map of `p ↦ c·H(x, p)`, the state updates for
//! the spatial and angular coordinates, and recovery of the optimal controls
//! from a costate.
//!
//! State layouts keep the spatial coordinates first:
//!
//! | model     | state             | costate                 |
//! |-----------|-------------------|-------------------------|
//! | car       | `(x, y, θ)`       | `(p_x, p_y, p_θ)`       |
//! | airplane  | `(x, y, z, θ)`    | `(p_x, p_y, p_z, p_θ)`  |
//! | submarine | `(x, y, z, θ, φ)` | `(p_x, p_y, p_z, p_θ, p_φ)` |
//!
//! Angles are never wrapped: the initial cost is the plain Euclidean distance
//! in state space, so `θ` and `θ + 2π` are different configurations.

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::obstacles::ObstacleSet;

/// Largest state dimension of any supported model.
pub const MAX_STATE_DIM: usize = 5;

/// Default regularizer added to `sin²φ` wherever it divides.
pub const DEFAULT_EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VehicleKind {
    Car,
    Airplane,
    Submarine,
}

impl std::fmt::Display for VehicleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            VehicleKind::Car => "car",
            VehicleKind::Airplane => "airplane",
            VehicleKind::Submarine => "submarine",
        })
    }
}

/// Curvature-constrained vehicle with its turn-rate bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Vehicle {
    /// Planar car moving forward or backward with `|θ̇| ≤ turn_rate`.
    Car { turn_rate: f64 },
    /// Forward-only airplane with decoupled heading and climb-rate bounds.
    Airplane {
        turn_rate_xy: f64,
        climb_rate_z: f64,
    },
    /// 3D vehicle with a total curvature bound.
    Submarine { curvature: f64 },
}

/// Step size and iteration count for the inexact inner gradient descents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentParams {
    pub eta: f64,
    pub steps: usize,
}

impl Default for DescentParams {
    fn default() -> Self {
        DescentParams {
            eta: 0.03,
            steps: 3,
        }
    }
}

/// Parameters for the bracket scan and bisection of the submarine turn prox.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionParams {
    pub scan_step: f64,
    pub scan_limit: usize,
    pub alpha_tol: f64,
    pub residual_tol: f64,
}

impl Default for BisectionParams {
    fn default() -> Self {
        BisectionParams {
            scan_step: 100.0,
            scan_limit: 1_000_000,
            alpha_tol: 1e-10,
            residual_tol: 1e-12,
        }
    }
}

/// Step sizes for one node update, plus the free-space factor at the node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxContext {
    pub delta: f64,
    pub sigma: f64,
    pub tau: f64,
    pub obstacle_factor: f64,
}

impl ProxContext {
    pub fn new(delta: f64, sigma: f64, tau: f64, obstacle_factor: f64) -> Result<Self> {
        for (name, v) in [("delta", delta), ("sigma", sigma), ("tau", tau)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PlanError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if sigma * tau >= 0.25 {
            return Err(PlanError::InvalidParameter(format!(
                "sigma * tau must be below 0.25, got {}",
                sigma * tau
            )));
        }
        if !(0.0..=1.0).contains(&obstacle_factor) {
            return Err(PlanError::InvalidParameter(format!(
                "obstacle factor must lie in [0, 1], got {obstacle_factor}"
            )));
        }
        Ok(ProxContext {
            delta,
            sigma,
            tau,
            obstacle_factor,
        })
    }

    /// Same context at a different node.
    pub fn at(self, obstacle_factor: f64) -> Self {
        ProxContext {
            obstacle_factor,
            ..self
        }
    }

    /// Weight `O·δ·σ` of the Hamiltonian in the costate prox.
    #[inline]
    pub fn prox_weight(&self) -> f64 {
        self.obstacle_factor * self.delta * self.sigma
    }

    /// Weight `O·δ·τ` of the Hamiltonian in the state updates.
    #[inline]
    pub fn state_weight(&self) -> f64 {
        self.obstacle_factor * self.delta * self.tau
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Soft threshold `max{0, 1 − c/|b|}·b`.
#[inline]
pub fn shrink(b: f64, c: f64) -> f64 {
    let a = b.abs();
    if a <= c {
        0.0
    } else {
        (1.0 - c / a) * b
    }
}

/// Prox of `c·|γᵀq|` at `beta` for a unit vector `γ`.
#[inline]
fn shrink_along(gamma: &[f64], beta: &[f64], c: f64, out: &mut [f64]) {
    let gb: f64 = gamma.iter().zip(beta).map(|(g, b)| g * b).sum();
    let coeff = if gb == 0.0 {
        0.0
    } else {
        (1.0 - c / gb.abs()).max(0.0) - 1.0
    };
    for ((o, g), b) in out.iter_mut().zip(gamma).zip(beta) {
        *o = coeff * gb * g + b;
    }
}

/// The scalar root problem behind the submarine's turn-costate prox.
///
/// The prox of `c·√(a q₁² + q₂²)` at `β` (with `a = 1/(sin²φ + ε)`) is
/// `(I + (c/α)·diag(a, 1))⁻¹ β`, where `α > 0` is the root of
///
/// ```text
/// g(α) = a β₁² / (α + c a)² + β₂² / (α + c)² − 1,
/// ```
///
/// or zero when `g(0) ≤ 0`. `g` is decreasing on `(−c, ∞)` and tends to `−1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurnProx {
    pub beta: [f64; 2],
    pub weight: f64,
    pub inv_sin2: f64,
}

impl TurnProx {
    pub fn residual(&self, alpha: f64) -> f64 {
        let [b1, b2] = self.beta;
        let c = self.weight;
        let a = self.inv_sin2;
        let d1 = alpha + c * a;
        let d2 = alpha + c;
        a * b1 * b1 / (d1 * d1) + b2 * b2 / (d2 * d2) - 1.0
    }

    /// `g(0)`, written to avoid dividing by `c·a` twice.
    fn residual_at_zero(&self) -> f64 {
        let [b1, b2] = self.beta;
        let c = self.weight;
        b1 * b1 / (self.inv_sin2 * c * c) + b2 * b2 / (c * c) - 1.0
    }

    /// Locates the root of [`Self::residual`]. Returns `None` when the prox
    /// collapses to zero.
    pub fn root(&self, params: &BisectionParams) -> Result<Option<f64>> {
        let c = self.weight;
        let g0 = self.residual_at_zero();
        if !(g0 > 0.0) {
            return Ok(None);
        }
        // scan -c + step·k for the first non-positive value
        let mut lo = 0.0;
        let mut hi = None;
        for k in 1..=params.scan_limit {
            let a = -c + params.scan_step * k as f64;
            if a <= 0.0 {
                continue;
            }
            if self.residual(a) <= 0.0 {
                hi = Some(a);
                break;
            }
            lo = a;
        }
        let Some(mut hi) = hi else {
            return Err(PlanError::BracketNotFound {
                scan_limit: params.scan_limit,
                beta: self.beta,
                shrink: c,
                g0,
            });
        };
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return Ok(Some(mid));
            }
            let g = self.residual(mid);
            if g == 0.0 {
                return Ok(Some(mid));
            }
            if g > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= params.alpha_tol * mid.max(1.0) && g.abs() <= params.residual_tol {
                return Ok(Some(mid));
            }
        }
    }

    pub fn solve(&self, params: &BisectionParams, out: &mut [f64]) -> Result<()> {
        if self.weight == 0.0 {
            out[..2].copy_from_slice(&self.beta);
            return Ok(());
        }
        match self.root(params)? {
            None => {
                out[0] = 0.0;
                out[1] = 0.0;
            }
            Some(alpha) => {
                out[0] = self.beta[0] * alpha / (alpha + self.weight * self.inv_sin2);
                out[1] = self.beta[1] * alpha / (alpha + self.weight);
            }
        }
        Ok(())
    }
}

/// A vehicle model together with its numerical regularization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleModel {
    vehicle: Vehicle,
    epsilon: f64,
    bisection: BisectionParams,
}

impl VehicleModel {
    pub fn new(vehicle: Vehicle) -> Result<Self> {
        let bounds: &[f64] = match &vehicle {
            Vehicle::Car { turn_rate } => &[*turn_rate],
            Vehicle::Airplane {
                turn_rate_xy,
                climb_rate_z,
            } => &[*turn_rate_xy, *climb_rate_z],
            Vehicle::Submarine { curvature } => &[*curvature],
        };
        if bounds.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(PlanError::InvalidParameter(format!(
                "turn-rate bounds must be positive: {vehicle:?}"
            )));
        }
        Ok(VehicleModel {
            vehicle,
            epsilon: DEFAULT_EPSILON,
            bisection: BisectionParams::default(),
        })
    }

    pub fn car(turn_rate: f64) -> Result<Self> {
        Self::new(Vehicle::Car { turn_rate })
    }

    pub fn airplane(turn_rate_xy: f64, climb_rate_z: f64) -> Result<Self> {
        Self::new(Vehicle::Airplane {
            turn_rate_xy,
            climb_rate_z,
        })
    }

    pub fn submarine(curvature: f64) -> Result<Self> {
        Self::new(Vehicle::Submarine { curvature })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(PlanError::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    pub fn with_bisection(mut self, bisection: BisectionParams) -> Self {
        self.bisection = bisection;
        self
    }

    pub fn vehicle(&self) -> Vehicle {
        self.vehicle
    }

    pub fn kind(&self) -> VehicleKind {
        match self.vehicle {
            Vehicle::Car { .. } => VehicleKind::Car,
            Vehicle::Airplane { .. } => VehicleKind::Airplane,
            Vehicle::Submarine { .. } => VehicleKind::Submarine,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn state_dim(&self) -> usize {
        match self.vehicle {
            Vehicle::Car { .. } => 3,
            Vehicle::Airplane { .. } => 4,
            Vehicle::Submarine { .. } => 5,
        }
    }

    pub fn spatial_dim(&self) -> usize {
        match self.vehicle {
            Vehicle::Car { .. } => 2,
            Vehicle::Airplane { .. } | Vehicle::Submarine { .. } => 3,
        }
    }

    /// Indices of the angular coordinates (always the trailing block).
    pub fn angular_range(&self) -> std::ops::Range<usize> {
        self.spatial_dim()..self.state_dim()
    }

    pub fn control_dim(&self) -> usize {
        match self.vehicle {
            Vehicle::Car { .. } => 2,
            Vehicle::Airplane { .. } | Vehicle::Submarine { .. } => 3,
        }
    }

    /// Names of the state components, for output headers.
    pub fn state_names(&self) -> &'static [&'static str] {
        match self.vehicle {
            Vehicle::Car { .. } => &["x", "y", "theta"],
            Vehicle::Airplane { .. } => &["x", "y", "z", "theta"],
            Vehicle::Submarine { .. } => &["x", "y", "z", "theta", "phi"],
        }
    }

    /// Bound on `|ẋ|` over admissible controls, used for reachability bounds.
    pub fn state_speed_bound(&self) -> f64 {
        match self.vehicle {
            Vehicle::Car { turn_rate } => (1.0 + turn_rate * turn_rate).sqrt(),
            Vehicle::Airplane {
                turn_rate_xy,
                climb_rate_z,
            } => (1.0 + turn_rate_xy * turn_rate_xy + climb_rate_z * climb_rate_z).sqrt(),
            Vehicle::Submarine { curvature } => (1.0 + 2.0 * curvature * curvature).sqrt(),
        }
    }

    /// Largest turn-rate bound of the model.
    pub fn max_turn_rate(&self) -> f64 {
        match self.vehicle {
            Vehicle::Car { turn_rate } => turn_rate,
            Vehicle::Airplane {
                turn_rate_xy,
                climb_rate_z,
            } => turn_rate_xy.max(climb_rate_z),
            Vehicle::Submarine { curvature } => curvature,
        }
    }

    pub fn check_dim(&self, what: &'static str, v: &[f64]) -> Result<()> {
        if v.len() != self.state_dim() {
            return Err(PlanError::DimensionMismatch {
                what,
                expected: self.state_dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn inv_sin2(&self, phi: f64) -> f64 {
        let s = phi.sin();
        1.0 / (s * s + self.epsilon)
    }

    /// Direction `γ` of the translational term; its length is the number of
    /// spatial components that enter through an absolute value or linear
    /// term.
    #[inline]
    fn heading(&self, x: &[f64]) -> ([f64; 3], usize) {
        match self.vehicle {
            Vehicle::Car { .. } => {
                let (s, c) = x[2].sin_cos();
                ([c, s, 0.0], 2)
            }
            Vehicle::Airplane { .. } => {
                let (s, c) = x[3].sin_cos();
                ([c, s, 0.0], 2)
            }
            Vehicle::Submarine { .. } => {
                let (st, ct) = x[3].sin_cos();
                let (sp, cp) = x[4].sin_cos();
                ([ct * sp, st * sp, cp], 3)
            }
        }
    }

    /// `H(x, p)` without dimension checks.
    #[inline]
    pub fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let (g, n) = self.heading(x);
        let gp: f64 = g[..n].iter().zip(p).map(|(g, p)| g * p).sum();
        match self.vehicle {
            Vehicle::Car { turn_rate } => gp.abs() + turn_rate * p[2].abs(),
            Vehicle::Airplane {
                turn_rate_xy,
                climb_rate_z,
            } => -gp + climb_rate_z * p[2].abs() + turn_rate_xy * p[3].abs(),
            Vehicle::Submarine { curvature } => {
                let a = self.inv_sin2(x[4]);
                gp.abs() + curvature * (a * p[3] * p[3] + p[4] * p[4]).sqrt()
            }
        }
    }

    pub fn eval_hamiltonian(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        self.check_dim("state", x)?;
        self.check_dim("costate", p)?;
        Ok(self.hamiltonian(x, p))
    }

    /// Costate update: `argmin_q { O·δ·σ·H(x_prev, q) + ½‖q − β‖² }`.
    pub fn prox_costate(
        &self,
        x_prev: &[f64],
        beta: &[f64],
        ctx: &ProxContext,
        out: &mut [f64],
    ) -> Result<()> {
        let c = ctx.prox_weight();
        let (g, n) = self.heading(x_prev);
        match self.vehicle {
            Vehicle::Car { turn_rate } => {
                shrink_along(&g[..2], &beta[..2], c, &mut out[..2]);
                out[2] = shrink(beta[2], c * turn_rate);
            }
            Vehicle::Airplane {
                turn_rate_xy,
                climb_rate_z,
            } => {
                out[0] = beta[0] + c * g[0];
                out[1] = beta[1] + c * g[1];
                out[2] = shrink(beta[2], c * climb_rate_z);
                out[3] = shrink(beta[3], c * turn_rate_xy);
            }
            Vehicle::Submarine { curvature } => {
                shrink_along(&g[..n], &beta[..n], c, &mut out[..n]);
                TurnProx {
                    beta: [beta[3], beta[4]],
                    weight: c * curvature,
                    inv_sin2: self.inv_sin2(x_prev[4]),
                }
                .solve(&self.bisection, &mut out[3..5])?;
            }
        }
        Ok(())
    }

    /// Allocating, dimension-checked form of [`Self::prox_costate`].
    pub fn prox_p(&self, x_prev: &[f64], beta: &[f64], ctx: &ProxContext) -> Result<Vec<f64>> {
        self.check_dim("state", x_prev)?;
        self.check_dim("costate", beta)?;
        let mut out = vec![0.0; self.state_dim()];
        self.prox_costate(x_prev, beta, ctx, &mut out)?;
        Ok(out)
    }

    /// Endpoint update: prox of `τ·|· − goal|` at `x0_prev + τ·p1`.
    pub fn update_x0(&self, x0_prev: &[f64], p1: &[f64], goal: &[f64], tau: f64, out: &mut [f64]) {
        let d = self.state_dim();
        let mut w = [0.0; MAX_STATE_DIM];
        for i in 0..d {
            w[i] = x0_prev[i] - goal[i] + tau * p1[i];
        }
        let norm = w[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
        let f = if norm == 0.0 {
            0.0
        } else {
            (1.0 - tau / norm).max(0.0)
        };
        for i in 0..d {
            out[i] = goal[i] + f * w[i];
        }
    }

    /// Spatial part of the interior state update.
    ///
    /// Starts at `ν = x_s − τ(p_j − p_{j+1})_s`; when obstacles are present,
    /// takes `descent.steps` gradient steps on
    /// `h(y) = −δτ·O(y, t)·H(x_prev, p_j) + ½‖y − ν‖²`.
    #[allow(clippy::too_many_arguments)]
    pub fn update_spatial(
        &self,
        x_prev: &[f64],
        p_j: &[f64],
        p_next: &[f64],
        ctx: &ProxContext,
        descent: &DescentParams,
        obs: &ObstacleSet,
        t: f64,
        out: &mut [f64],
    ) {
        let ds = self.spatial_dim();
        let mut nu = [0.0; 3];
        for i in 0..ds {
            nu[i] = x_prev[i] - ctx.tau * (p_j[i] - p_next[i]);
        }
        out[..ds].copy_from_slice(&nu[..ds]);
        if obs.is_empty() {
            return;
        }
        let weight = ctx.delta * ctx.tau * self.hamiltonian(x_prev, p_j);
        let mut grad = [0.0; 3];
        for _ in 0..descent.steps {
            obs.smooth_indicator_gradient(&out[..ds], t, &mut grad[..ds]);
            for i in 0..ds {
                out[i] -= descent.eta * (-weight * grad[i] + (out[i] - nu[i]));
            }
        }
    }

    /// Angular part of the interior state update: `descent.steps` gradient
    /// steps on [`AngularObjective`] started at its anchor `ν`.
    #[allow(clippy::too_many_arguments)]
    pub fn update_angular(
        &self,
        x_prev: &[f64],
        p_j: &[f64],
        p_next: &[f64],
        ctx: &ProxContext,
        descent: &DescentParams,
        out: &mut [f64],
    ) {
        let objective = AngularObjective::new(self, x_prev, p_j, p_next, ctx);
        let na = objective.len();
        let mut angles = objective.anchor;
        let mut grad = [0.0; 2];
        for _ in 0..descent.steps {
            objective.gradient(&angles[..na], &mut grad[..na]);
            for i in 0..na {
                angles[i] -= descent.eta * grad[i];
            }
        }
        out[..na].copy_from_slice(&angles[..na]);
    }

    /// Optimal controls for the forward problem given a costate.
    ///
    /// Car `(v, ω)`, airplane `(v, ω_z, ω_xy)`, submarine `(v, ω₁, ω₂)`.
    /// `sign(0)` is taken as `0`.
    pub fn recover_controls(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        let (g, n) = self.heading(x);
        let gp: f64 = g[..n].iter().zip(p).map(|(g, p)| g * p).sum();
        match self.vehicle {
            Vehicle::Car { .. } => vec![-sign(gp), -sign(p[2])],
            Vehicle::Airplane { .. } => vec![1.0, -sign(p[2]), -sign(p[3])],
            Vehicle::Submarine { .. } => {
                let s = x[4].sin();
                let d1 = -p[3] * self.inv_sin2(x[4]);
                let d2 = -p[4];
                let norm = (d1 * d1 * s * s + d2 * d2).sqrt();
                if norm > 0.0 && norm.is_finite() {
                    vec![-sign(gp), d1 / norm, d2 / norm]
                } else {
                    vec![-sign(gp), 0.0, 0.0]
                }
            }
        }
    }

    /// Checks that a control vector is admissible at state `x`.
    pub fn check_controls(&self, x: &[f64], u: &[f64]) -> std::result::Result<(), String> {
        if u.len() != self.control_dim() {
            return Err(format!(
                "expected {} control components, got {}",
                self.control_dim(),
                u.len()
            ));
        }
        const SLACK: f64 = 1e-9;
        match self.vehicle {
            Vehicle::Car { .. } | Vehicle::Airplane { .. } => {
                if let Some(v) = u.iter().find(|v| !(v.abs() <= 1.0 + SLACK)) {
                    return Err(format!("control component {v} outside [-1, 1]"));
                }
            }
            Vehicle::Submarine { .. } => {
                if !(u[0].abs() <= 1.0 + SLACK) {
                    return Err(format!("speed {} outside [-1, 1]", u[0]));
                }
                let s = x[4].sin();
                let k = (u[1] * u[1] * s * s + u[2] * u[2]).sqrt();
                if !(k <= 1.0 + SLACK) {
                    return Err(format!("curvature constraint violated: {k}"));
                }
            }
        }
        Ok(())
    }

    /// State velocity `f(x, u)` of the forward kinematics.
    pub fn kinematics(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        match self.vehicle {
            Vehicle::Car { turn_rate } => {
                let (s, c) = x[2].sin_cos();
                out[0] = u[0] * c;
                out[1] = u[0] * s;
                out[2] = u[1] * turn_rate;
            }
            Vehicle::Airplane {
                turn_rate_xy,
                climb_rate_z,
            } => {
                let (s, c) = x[3].sin_cos();
                out[0] = u[0] * c;
                out[1] = u[0] * s;
                out[2] = u[1] * climb_rate_z;
                out[3] = u[2] * turn_rate_xy;
            }
            Vehicle::Submarine { curvature } => {
                let (st, ct) = x[3].sin_cos();
                let (sp, cp) = x[4].sin_cos();
                out[0] = u[0] * ct * sp;
                out[1] = u[0] * st * sp;
                out[2] = u[0] * cp;
                out[3] = u[1] * curvature;
                out[4] = u[2] * curvature;
            }
        }
    }

    /// Forward-Euler integration of the kinematics under a control sequence.
    /// Returns `controls.len() + 1` states starting with `start`.
    pub fn rollout(
        &self,
        start: &[f64],
        controls: &[Vec<f64>],
        delta: f64,
    ) -> Result<Vec<Vec<f64>>> {
        self.check_dim("start", start)?;
        let d = self.state_dim();
        let mut states = Vec::with_capacity(controls.len() + 1);
        states.push(start.to_vec());
        let mut vel = [0.0; MAX_STATE_DIM];
        for (step, u) in controls.iter().enumerate() {
            let x = states.last().unwrap();
            self.check_controls(x, u)
                .map_err(|reason| PlanError::InadmissibleControl { step, reason })?;
            self.kinematics(x, u, &mut vel[..d]);
            let next: Vec<f64> = x
                .iter()
                .zip(&vel[..d])
                .map(|(x, v)| x + delta * v)
                .collect();
            states.push(next);
        }
        Ok(states)
    }
}

/// Angular objective of the interior state update,
/// `h(a) = −w·H(a; p_j) + ½‖a − ν‖²` with `w = O·δ·τ`.
///
/// Only the angle-dependent part of `H` matters for the gradient; the value
/// includes the full Hamiltonian.
#[derive(Debug, Clone, Copy)]
pub struct AngularObjective<'a> {
    model: &'a VehicleModel,
    p: [f64; MAX_STATE_DIM],
    pub anchor: [f64; 2],
    pub weight: f64,
}

impl<'a> AngularObjective<'a> {
    pub fn new(
        model: &'a VehicleModel,
        x_prev: &[f64],
        p_j: &[f64],
        p_next: &[f64],
        ctx: &ProxContext,
    ) -> Self {
        let range = model.angular_range();
        let mut anchor = [0.0; 2];
        for (k, i) in range.clone().enumerate() {
            anchor[k] = x_prev[i] - ctx.tau * (p_j[i] - p_next[i]);
        }
        let mut p = [0.0; MAX_STATE_DIM];
        p[..model.state_dim()].copy_from_slice(&p_j[..model.state_dim()]);
        AngularObjective {
            model,
            p,
            anchor,
            weight: ctx.state_weight(),
        }
    }

    /// Number of angular coordinates.
    pub fn len(&self) -> usize {
        self.model.state_dim() - self.model.spatial_dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, angles: &[f64]) -> f64 {
        let mut x = [0.0; MAX_STATE_DIM];
        let start = self.model.spatial_dim();
        x[start..start + angles.len()].copy_from_slice(angles);
        let h = self
            .model
            .hamiltonian(&x[..self.model.state_dim()], &self.p);
        let quad: f64 = angles
            .iter()
            .zip(&self.anchor)
            .map(|(a, n)| (a - n) * (a - n))
            .sum();
        -self.weight * h + 0.5 * quad
    }

    /// Gradient of [`Self::value`]; the subgradient of `|·|` at zero is `0`.
    pub fn gradient(&self, angles: &[f64], out: &mut [f64]) {
        let p = &self.p;
        let w = self.weight;
        match self.model.vehicle {
            Vehicle::Car { .. } => {
                let (s, c) = angles[0].sin_cos();
                let dh = sign(p[0] * c + p[1] * s) * (-p[0] * s + p[1] * c);
                out[0] = -w * dh + (angles[0] - self.anchor[0]);
            }
            Vehicle::Airplane { .. } => {
                let (s, c) = angles[0].sin_cos();
                let dh = p[0] * s - p[1] * c;
                out[0] = -w * dh + (angles[0] - self.anchor[0]);
            }
            Vehicle::Submarine { curvature } => {
                let (st, ct) = angles[0].sin_cos();
                let (sp, cp) = angles[1].sin_cos();
                let sg = sign(p[0] * ct * sp + p[1] * st * sp + p[2] * cp);
                let dh_theta = sg * (-p[0] * st * sp + p[1] * ct * sp);
                let mut dh_phi = sg * (p[0] * ct * cp + p[1] * st * cp - p[2] * sp);
                let a = self.model.inv_sin2(angles[1]);
                let q = (a * p[3] * p[3] + p[4] * p[4]).sqrt();
                if q > 0.0 {
                    dh_phi -= curvature * p[3] * p[3] * sp * cp * a * a / q;
                }
                out[0] = -w * dh_theta + (angles[0] - self.anchor[0]);
                out[1] = -w * dh_phi + (angles[1] - self.anchor[1]);
            }
        }
    }
}

/// Euclidean distance `|x − goal|` in state space (the initial cost).
pub fn goal_distance(x: &[f64], goal: &[f64]) -> f64 {
    x.iter()
        .zip(goal)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn ctx(c: f64) -> ProxContext {
        // δ = 0.1, σ = c / 0.1
        ProxContext::new(0.1, c / 0.1, 0.2 * 0.1 / c.max(0.1), 1.0).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let car = VehicleModel::car(2.0).unwrap();
        assert_eq!(car.hamiltonian(&[0.3, -1.0, 0.7], &[0.0; 3]), 0.0);
        assert_eq!(car.hamiltonian(&[0.0, 0.0, 0.0], &[1.0, 0.0, -2.0]), 5.0);

        let sub = VehicleModel::submarine(2.0).unwrap();
        let h = sub.hamiltonian(&[0.0, 0.0, 0.0, 0.0, FRAC_PI_2], &[1.0, 0.0, 0.0, 0.0, 3.0]);
        assert!((h - 7.0).abs() < 1e-12);

        let plane = VehicleModel::airplane(2.5, 0.5).unwrap();
        let h = plane.hamiltonian(&[0.0, 0.0, 0.0, 0.0], &[1.0, 2.0, -2.0, 1.0]);
        assert!((h - (-1.0 + 1.0 + 2.5)).abs() < 1e-12);
    }

    #[test]
    fn eval_checks_dimensions() {
        let car = VehicleModel::car(2.0).unwrap();
        assert!(matches!(
            car.eval_hamiltonian(&[0.0; 4], &[0.0; 3]),
            Err(PlanError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_models_and_contexts() {
        assert!(VehicleModel::car(0.0).is_err());
        assert!(VehicleModel::airplane(1.0, -1.0).is_err());
        assert!(ProxContext::new(0.1, 1.0, 0.25, 1.0).is_err());
        assert!(ProxContext::new(0.1, 1.0, 0.2, 1.5).is_err());
        assert!(ProxContext::new(0.0, 1.0, 0.2, 1.0).is_err());
    }

    #[test]
    fn car_prox_examples() {
        let car = VehicleModel::car(2.0).unwrap();
        let p = car.prox_p(&[0.0; 3], &[0.0; 3], &ctx(0.1)).unwrap();
        assert_eq!(p, vec![0.0; 3]);

        let p = car.prox_p(&[0.0; 3], &[5.0, 0.0, 0.05], &ctx(0.1)).unwrap();
        assert!((p[0] - 4.9).abs() < 1e-12);
        assert_eq!(p[1], 0.0);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn car_prox_orthogonal_beta_passes_through() {
        let car = VehicleModel::car(2.0).unwrap();
        let p = car.prox_p(&[0.0; 3], &[0.0, 3.0, 1.0], &ctx(0.1)).unwrap();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[1], 3.0);
        assert!((p[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn airplane_prox_is_linear_in_planar_part() {
        let plane = VehicleModel::airplane(2.5, 0.5).unwrap();
        let p = plane
            .prox_p(&[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0, 0.01, 1.0], &ctx(0.1))
            .unwrap();
        assert!((p[0] - 1.1).abs() < 1e-12);
        assert!((p[1] - 1.0).abs() < 1e-12);
        assert_eq!(p[2], 0.0);
        assert!((p[3] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn submarine_isotropic_turn_prox() {
        let sub = VehicleModel::submarine(1.0).unwrap();
        let x = [0.0, 0.0, 0.0, 0.3, FRAC_PI_2];
        let p = sub
            .prox_p(&x, &[0.0, 0.0, 0.0, 3.0, 4.0], &ctx(1.0 / 1.0))
            .unwrap();
        assert!((p[3] - 2.4).abs() < 1e-10, "{p:?}");
        assert!((p[4] - 3.2).abs() < 1e-10, "{p:?}");
        let tp = TurnProx {
            beta: [3.0, 4.0],
            weight: 1.0,
            inv_sin2: 1.0 / (1.0 + DEFAULT_EPSILON),
        };
        let alpha = tp.root(&BisectionParams::default()).unwrap().unwrap();
        assert!((alpha - 4.0).abs() < 1e-8);
    }

    #[test]
    fn submarine_small_beta_collapses() {
        let sub = VehicleModel::submarine(2.0).unwrap();
        let x = [0.0, 0.0, 0.0, 0.3, 1.0];
        let p = sub
            .prox_p(&x, &[0.0, 0.0, 0.0, 0.01, 0.01], &ctx(0.1))
            .unwrap();
        assert_eq!(&p[3..], &[0.0, 0.0]);
    }

    #[test]
    fn bracket_scan_limit_is_reported() {
        let tp = TurnProx {
            beta: [1e6, 1e6],
            weight: 1.0,
            inv_sin2: 1.0,
        };
        let params = BisectionParams {
            scan_limit: 3,
            ..BisectionParams::default()
        };
        assert!(matches!(
            tp.root(&params),
            Err(PlanError::BracketNotFound { .. })
        ));
        assert!(tp.root(&BisectionParams::default()).unwrap().is_some());
    }

    #[test]
    fn x0_update_cases() {
        let car = VehicleModel::car(2.0).unwrap();
        let goal = [1.0, 2.0, 3.0];
        let mut out = [0.0; 3];
        car.update_x0(&goal, &[0.0; 3], &goal, 0.2, &mut out);
        assert_eq!(out, goal);

        car.update_x0(&[2.0, 0.0, 0.0], &[0.0; 3], &[0.0; 3], 0.2, &mut out);
        assert!((out[0] - 1.8).abs() < 1e-15 && out[1] == 0.0 && out[2] == 0.0);

        car.update_x0(&[0.1, 0.0, 0.0], &[0.0; 3], &[0.0; 3], 0.2, &mut out);
        assert_eq!(out, [0.0; 3]);
    }

    #[test]
    fn free_space_spatial_update_is_closed_form() {
        let car = VehicleModel::car(2.0).unwrap();
        let obs = ObstacleSet::empty(2);
        let c = ProxContext::new(0.1, 1.0, 0.2, 1.0).unwrap();
        let mut out = [0.0; 2];
        car.update_spatial(
            &[1.0, 2.0, 0.5],
            &[1.0, -1.0, 0.0],
            &[0.5, 0.5, 0.0],
            &c,
            &DescentParams::default(),
            &obs,
            0.0,
            &mut out,
        );
        assert!((out[0] - 0.9).abs() < 1e-15);
        assert!((out[1] - 2.3).abs() < 1e-15);

        let p = [0.3, 0.1, -0.2];
        car.update_spatial(
            &[1.0, 2.0, 0.5],
            &p,
            &p,
            &c,
            &DescentParams::default(),
            &obs,
            0.0,
            &mut out,
        );
        assert_eq!(out, [1.0, 2.0]);
    }

    #[test]
    fn zero_costates_leave_angles_fixed() {
        let c = ProxContext::new(0.1, 1.0, 0.2, 1.0).unwrap();
        for model in [
            VehicleModel::car(2.0).unwrap(),
            VehicleModel::airplane(2.5, 0.5).unwrap(),
            VehicleModel::submarine(2.0).unwrap(),
        ] {
            let d = model.state_dim();
            let x: Vec<f64> = (0..d).map(|i| 0.3 + i as f64 * 0.2).collect();
            let zero = vec![0.0; d];
            let mut out = [0.0; 2];
            model.update_angular(&x, &zero, &zero, &c, &DescentParams::default(), &mut out);
            let range = model.angular_range();
            assert_eq!(&out[..range.len()], &x[range]);
        }
    }

    #[test]
    fn control_recovery_examples() {
        let car = VehicleModel::car(3.0).unwrap();
        assert_eq!(car.recover_controls(&[0.0; 3], &[0.0; 3]), vec![0.0, 0.0]);
        assert_eq!(
            car.recover_controls(&[0.0; 3], &[1.0, 0.0, -1.0]),
            vec![-1.0, 1.0]
        );

        let plane = VehicleModel::airplane(2.5, 0.5).unwrap();
        assert_eq!(
            plane.recover_controls(&[0.0; 4], &[1.0, 0.0, 2.0, -1.0]),
            vec![1.0, -1.0, 1.0]
        );

        let sub = VehicleModel::submarine(2.0).unwrap();
        let u = sub.recover_controls(&[0.0, 0.0, 0.0, 0.0, FRAC_PI_2], &[0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(u[1], 0.0);
        assert!((u[2] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rollout_examples() {
        let car = VehicleModel::car(2.0).unwrap();
        let straight = vec![vec![1.0, 0.0]; 10];
        let path = car.rollout(&[0.0; 3], &straight, 0.1).unwrap();
        let end = path.last().unwrap();
        assert!((end[0] - 1.0).abs() < 1e-12 && end[1].abs() < 1e-12 && end[2] == 0.0);

        let turning = vec![vec![1.0, 1.0]; 10];
        let path = car.rollout(&[0.0; 3], &turning, 0.1).unwrap();
        for w in path.windows(2) {
            assert!(((w[1][2] - w[0][2]) / 0.1 - 2.0).abs() < 1e-12);
        }

        let sub = VehicleModel::submarine(2.0).unwrap();
        let level = vec![vec![1.0, 0.0, 0.0]; 10];
        let path = sub
            .rollout(&[0.0, 0.0, 0.0, 0.0, FRAC_PI_2], &level, 0.1)
            .unwrap();
        let end = path.last().unwrap();
        assert!((end[0] - 1.0).abs() < 1e-12);
        assert!(end[1].abs() < 1e-12 && end[2].abs() < 1e-12);

        assert!(matches!(
            car.rollout(&[0.0; 3], &[vec![1.5, 0.0]], 0.1),
            Err(PlanError::InadmissibleControl { step: 0, .. })
        ));
        assert!(sub
            .rollout(
                &[0.0, 0.0, 0.0, 0.0, FRAC_PI_2],
                &[vec![1.0, 0.8, 0.8]],
                0.1
            )
            .is_err());
    }
}
