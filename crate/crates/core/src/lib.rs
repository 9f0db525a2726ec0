//! Curvature-constrained trajectory planning for Dubins-type vehicles.
//!
//! Optimal paths are found by evaluating the level-set Hamilton-Jacobi-Bellman
//! value function pointwise through a generalized Hopf-Lax formula. The
//! minimization over discrete state/costate paths is carried out with an
//! alternating primal-dual splitting whose subproblems are closed-form
//! proximal maps (costates) or a few gradient steps (states).
//!
//! - [`obstacles`]: moving-ball obstacle sets, smoothed free-space indicator,
//!   greedy ball decomposition of rasterized regions.
//! - [`hamiltonian`]: car, airplane and submarine kernels.
//! - [`solver`]: the splitting iteration, horizon search, physical-time paths.
//! - [`oracles`]: brute-force and finite-difference checks used by the tests.
//! - [`scenario`]: scenario files, run orchestration and output files.

// `!(x > 0.0)` style checks deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hamiltonian;
pub mod obstacles;
pub mod oracles;
pub mod scenario;
pub mod solver;

pub use error::{PlanError, Result};
pub use hamiltonian::{DescentParams, ProxContext, Vehicle, VehicleKind, VehicleModel};
pub use obstacles::{decompose_region, Motion, MovingBall, ObstacleSet, RasterRegion};
pub use scenario::{load_scenario, run, write_scenario, RunSummary, Scenario};
pub use solver::{
    extract_physical_path, find_min_horizon, solve, DiscreteTrajectory, HorizonSearch, SolveResult,
    SolverConfig,
};
