#![allow(dead_code)]

use std::f64::consts::PI;

use hopf_plan::{ProxContext, VehicleKind, VehicleModel};
use rand::Rng;

pub const KINDS: [VehicleKind; 3] = [
    VehicleKind::Car,
    VehicleKind::Airplane,
    VehicleKind::Submarine,
];

/// Model of the given kind with rate bounds drawn from `[0.5, 3]`.
pub fn random_model<R: Rng>(rng: &mut R, kind: VehicleKind) -> VehicleModel {
    let mut w = || rng.gen_range(0.5..3.0);
    match kind {
        VehicleKind::Car => VehicleModel::car(w()).unwrap(),
        VehicleKind::Airplane => VehicleModel::airplane(w(), w()).unwrap(),
        VehicleKind::Submarine => VehicleModel::submarine(w()).unwrap(),
    }
}

/// Spatial coordinates in `[-3, 3]`, headings in `[-2π, 2π]`, inclination
/// in `[0, π]`.
pub fn random_state<R: Rng>(rng: &mut R, model: &VehicleModel) -> Vec<f64> {
    let mut x: Vec<f64> = (0..model.state_dim())
        .map(|_| rng.gen_range(-3.0..3.0))
        .collect();
    let heading = model.spatial_dim();
    x[heading] = rng.gen_range(-2.0 * PI..2.0 * PI);
    if model.kind() == VehicleKind::Submarine {
        x[4] = rng.gen_range(0.0..PI);
    }
    x
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

/// Context with `δσ = c` and unit obstacle factor.
pub fn ctx_with(c: f64) -> ProxContext {
    ProxContext::new(c, 1.0, 0.2, 1.0).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest per-node second difference of the spatial path divided by `δ²`,
/// i.e. a curvature estimate for unit-speed motion, at each interior node.
pub fn curvature_estimates(states: &[Vec<f64>], spatial_dim: usize, delta: f64) -> Vec<f64> {
    states
        .windows(3)
        .map(|w| {
            (0..spatial_dim)
                .map(|i| {
                    let v = w[2][i] - 2.0 * w[1][i] + w[0][i];
                    v * v
                })
                .sum::<f64>()
                .sqrt()
                / (delta * delta)
        })
        .collect()
}
