//! Brute-force and finite-difference reference computations.
//!
//! Nothing here is used by the solver. These routines only evaluate
//! objectives pointwise so the test suite can check the closed-form kernels
//! against them.

use crate::error::{PlanError, Result};
use crate::hamiltonian::{ProxContext, Vehicle, VehicleModel};

/// Box and resolution of a nested grid scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub center: Vec<f64>,
    pub half_width: f64,
    pub levels: usize,
    pub points_per_axis: usize,
}

/// Each level shrinks the box half-width by this factor around the incumbent.
pub const REFINE_FACTOR: f64 = 5.0;

impl ScanSpec {
    pub fn new(
        center: Vec<f64>,
        half_width: f64,
        levels: usize,
        points_per_axis: usize,
    ) -> Result<Self> {
        if levels < 1 {
            return Err(PlanError::InvalidParameter(
                "scan needs at least one level".into(),
            ));
        }
        if points_per_axis < 11 {
            return Err(PlanError::InvalidParameter(format!(
                "scan needs at least 11 points per axis, got {points_per_axis}"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(PlanError::InvalidParameter(format!(
                "scan half-width must be positive, got {half_width}"
            )));
        }
        Ok(Self {
            center,
            half_width,
            levels,
            points_per_axis,
        })
    }

    /// Box centred at `β` wide enough to contain the costate prox of any
    /// supported model.
    pub fn for_prox(
        model: &VehicleModel,
        beta: &[f64],
        ctx: &ProxContext,
        levels: usize,
        points_per_axis: usize,
    ) -> Result<Self> {
        let norm = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
        let w = match model.vehicle() {
            Vehicle::Car { turn_rate } => turn_rate,
            Vehicle::Airplane {
                turn_rate_xy,
                climb_rate_z,
            } => turn_rate_xy.max(climb_rate_z),
            Vehicle::Submarine { curvature } => curvature,
        };
        let half = 2.0 * (norm + ctx.prox_weight() * w.max(1.0));
        Self::new(beta.to_vec(), half.max(1e-3), levels, points_per_axis)
    }

    /// Grid spacing at the final level.
    pub fn final_cell(&self) -> f64 {
        let first = 2.0 * self.half_width / (self.points_per_axis - 1) as f64;
        first / REFINE_FACTOR.powi(self.levels as i32 - 1)
    }
}

/// Incumbent after each block of a scan; the last entry is the answer.
#[derive(Debug, Clone)]
pub struct ScanTrace {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl ScanTrace {
    pub fn best(&self) -> &[f64] {
        self.points.last().expect("scan has at least one level")
    }
}

/// Nested 1D grid minimization of `f` along `axis`, every evaluation being
/// the partial minimum over `rest` (found the same way). Returns the minimum
/// and leaves the minimizer in `point`.
///
/// For convex `f` the minimizer of each 1D scan lies within one grid step of
/// the incumbent, which the next level's box (two steps wide on each side)
/// always contains; partial minima of convex functions are convex.
fn nested_scan<F: Fn(&[f64]) -> f64>(
    f: &F,
    point: &mut [f64],
    axes: &[usize],
    spec: &ScanSpec,
) -> f64 {
    let Some((&axis, rest)) = axes.split_first() else {
        return f(point);
    };
    let n = spec.points_per_axis;
    let mut half = spec.half_width;
    let mut center = spec.center[axis];
    let mut best_val = f64::INFINITY;
    let mut best = point.to_vec();
    let mut probe = point.to_vec();
    for _ in 0..spec.levels {
        let step = 2.0 * half / (n - 1) as f64;
        for i in 0..n {
            probe[axis] = center - half + i as f64 * step;
            let v = nested_scan(f, &mut probe, rest, spec);
            if v < best_val {
                best_val = v;
                best.copy_from_slice(&probe);
            }
        }
        center = best[axis];
        half /= REFINE_FACTOR;
    }
    point.copy_from_slice(&best);
    best_val
}

/// Grid minimization of `f` over the box of `spec`, one coordinate block at
/// a time. Exact (to the final grid cell) for convex objectives that are sums
/// of per-block terms.
pub fn scan_minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    blocks: &[Vec<usize>],
    spec: &ScanSpec,
) -> ScanTrace {
    let mut point = spec.center.clone();
    let mut trace = ScanTrace {
        points: Vec::new(),
        values: Vec::new(),
    };
    for axes in blocks {
        let v = nested_scan(&f, &mut point, axes, spec);
        trace.points.push(point.clone());
        trace.values.push(v);
    }
    trace
}

/// Coordinate groups over which the costate prox objective is additively
/// separable in [`heading_frame`] coordinates.
pub fn costate_blocks(model: &VehicleModel) -> Vec<Vec<usize>> {
    match model.vehicle() {
        Vehicle::Car { .. } => vec![vec![0], vec![1], vec![2]],
        Vehicle::Airplane { .. } => vec![vec![0], vec![1], vec![2], vec![3]],
        Vehicle::Submarine { .. } => vec![vec![0], vec![1], vec![2], vec![3, 4]],
    }
}

/// The costate prox objective `O·δσ·H(x_prev, q) + ½‖q − β‖²`.
pub fn prox_objective(
    model: &VehicleModel,
    x_prev: &[f64],
    beta: &[f64],
    ctx: &ProxContext,
    q: &[f64],
) -> f64 {
    let d2: f64 = q.iter().zip(beta).map(|(a, b)| (a - b) * (a - b)).sum();
    ctx.prox_weight() * model.hamiltonian(x_prev, q) + 0.5 * d2
}

/// Orthonormal basis (rows) whose first vector is the heading direction at
/// `x`, completed by Gram-Schmidt on the coordinate axes. Angular costate
/// axes are kept as they are.
///
/// In this frame the ridge of `|γᵀq|` is a coordinate hyperplane, so a grid
/// scan cannot get trapped beside it.
pub fn heading_frame(model: &VehicleModel, x: &[f64]) -> Vec<Vec<f64>> {
    let d = model.state_dim();
    let n = match model.vehicle() {
        Vehicle::Submarine { .. } => 3,
        _ => 2,
    };
    let heading = model.spatial_dim();
    let gamma: Vec<f64> = if n == 3 {
        let (st, ct) = x[3].sin_cos();
        let (sp, cp) = x[4].sin_cos();
        vec![ct * sp, st * sp, cp]
    } else {
        let (s, c) = x[heading].sin_cos();
        vec![c, s]
    };
    let mut rows: Vec<Vec<f64>> = vec![gamma];
    for axis in 0..n {
        if rows.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        for r in &rows {
            let dot: f64 = r.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(vi, ri)| *vi -= dot * ri);
        }
        let len = norm(&v);
        if len > 0.5 {
            rows.push(v.into_iter().map(|vi| vi / len).collect());
        }
    }
    let mut frame = vec![vec![0.0; d]; d];
    for (i, r) in rows.iter().enumerate() {
        frame[i][..n].copy_from_slice(r);
    }
    for (i, row) in frame.iter_mut().enumerate().skip(n) {
        row[i] = 1.0;
    }
    frame
}

fn to_frame(frame: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    frame
        .iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn from_frame(frame: &[Vec<f64>], c: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (r, ci) in frame.iter().zip(c) {
        out.iter_mut().zip(r).for_each(|(o, ri)| *o += ci * ri);
    }
}

/// Brute-force costate prox by nested grid scan.
pub fn prox_oracle(
    model: &VehicleModel,
    x_prev: &[f64],
    beta: &[f64],
    ctx: &ProxContext,
    spec: &ScanSpec,
) -> Vec<f64> {
    prox_oracle_trace(model, x_prev, beta, ctx, spec)
        .best()
        .to_vec()
}

/// [`prox_oracle`] with the incumbent after every block. The scan runs in
/// [`heading_frame`] coordinates centred at the image of `spec.center`;
/// reported points are mapped back.
pub fn prox_oracle_trace(
    model: &VehicleModel,
    x_prev: &[f64],
    beta: &[f64],
    ctx: &ProxContext,
    spec: &ScanSpec,
) -> ScanTrace {
    let frame = heading_frame(model, x_prev);
    let framed = ScanSpec {
        center: to_frame(&frame, &spec.center),
        ..spec.clone()
    };
    let mut q = vec![0.0; beta.len()];
    let f = |c: &[f64]| {
        let mut q = vec![0.0; c.len()];
        from_frame(&frame, c, &mut q);
        prox_objective(model, x_prev, beta, ctx, &q)
    };
    let mut trace = scan_minimize(f, &costate_blocks(model), &framed);
    for p in trace.points.iter_mut() {
        from_frame(&frame, p, &mut q);
        p.copy_from_slice(&q);
    }
    trace
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn fd_gradient<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

const ALIGN_TOL: f64 = 1e-9;

/// Minimal travel time between two configurations whose headings both point
/// along the segment joining them, so the optimal path is the segment
/// traversed at unit speed.
pub fn straightline_oracle(start: &[f64], goal: &[f64], model: &VehicleModel) -> Result<f64> {
    model.check_dim("start", start)?;
    model.check_dim("goal", goal)?;
    let ds = model.spatial_dim();
    let angles = model.angular_range();
    if start[angles.clone()]
        .iter()
        .zip(&goal[angles.clone()])
        .any(|(a, b)| (a - b).abs() > ALIGN_TOL)
    {
        return Err(PlanError::Unsupported(
            "start and goal headings differ".into(),
        ));
    }
    let delta: Vec<f64> = goal[..ds]
        .iter()
        .zip(&start[..ds])
        .map(|(g, s)| g - s)
        .collect();

    let (moving, dir, reversible) = match model.vehicle() {
        Vehicle::Car { .. } => {
            let (s, c) = start[2].sin_cos();
            (delta.clone(), vec![c, s], true)
        }
        Vehicle::Airplane { climb_rate_z, .. } => {
            let planar = delta[..2].to_vec();
            let dist = norm(&planar);
            if delta[2].abs() > climb_rate_z * dist + ALIGN_TOL {
                return Err(PlanError::Unsupported(
                    "altitude change cannot be completed during the straight leg".into(),
                ));
            }
            let (s, c) = start[3].sin_cos();
            (planar, vec![c, s], false)
        }
        Vehicle::Submarine { .. } => {
            let (st, ct) = start[3].sin_cos();
            let (sp, cp) = start[4].sin_cos();
            (delta.clone(), vec![ct * sp, st * sp, cp], true)
        }
    };

    let dist = norm(&moving);
    if dist <= ALIGN_TOL {
        if matches!(model.vehicle(), Vehicle::Airplane { .. }) {
            return Err(PlanError::Unsupported(
                "a forward-only airplane cannot hold position".into(),
            ));
        }
        return Ok(0.0);
    }
    let cos = moving.iter().zip(&dir).map(|(a, b)| a * b).sum::<f64>() / dist;
    let aligned = (cos - 1.0).abs() <= ALIGN_TOL || (reversible && (cos + 1.0).abs() <= ALIGN_TOL);
    if !aligned {
        return Err(PlanError::Unsupported(
            "heading is not aligned with the segment".into(),
        ));
    }
    Ok(dist)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}
