//! Scenario files, run orchestration and output files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! schema_version = 1
//! id = "car_free"
//! seed = 0
//! start = [0.0, 0.0, 0.0]
//! goal = [2.0, 0.0, 0.0]
//! horizon = 2.2            # or "auto", which needs [horizon_search]
//!
//! [vehicle]
//! kind = "car"
//! turn_rate = 2.0
//!
//! [[obstacles.balls]]
//! center = [1.0, 1.0]
//! radius = 0.3
//! motion = { kind = "rotation", pivot = [0.0, 0.0], rate = -1.0 }
//!
//! [solver]
//! max_iters = 20000
//! ```
//!
//! A run writes `trajectory.csv`, `summary.toml` and the resolved
//! `scenario.toml` (raster regions replaced by their balls) into its output
//! directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};
use crate::hamiltonian::{VehicleKind, VehicleModel, DEFAULT_EPSILON};
use crate::obstacles::{
    decompose_region, MovingBall, ObstacleSet, RasterRegion, DEFAULT_STEEPNESS,
};
use crate::solver::{find_min_horizon, solve, HorizonSearch, SolveResult, SolverConfig};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const RESOLVED_SCENARIO_FILE: &str = "scenario.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub start: Vec<f64>,
    pub goal: Vec<f64>,
    pub horizon: Horizon,
    pub vehicle: VehicleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_search: Option<SearchSpec>,
    #[serde(default, skip_serializing_if = "ObstacleSpec::is_empty")]
    pub obstacles: ObstacleSpec,
    #[serde(default, skip_serializing_if = "SolverOverrides::is_empty")]
    pub solver: SolverOverrides,
    /// Balls produced from the raster region when the file was loaded.
    #[serde(skip)]
    pub decomposed: Vec<MovingBall>,
}

/// A fixed horizon or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    Fixed(f64),
    Auto(AutoHorizon),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoHorizon {
    Auto,
}

/// Vehicle kind and its rate bounds. Only the fields of the chosen kind may
/// be present: `turn_rate` (car), `turn_rate_xy` and `climb_rate_z`
/// (airplane), `curvature` and optionally `epsilon` (submarine).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub kind: VehicleKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_rate_xy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub climb_rate_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

impl VehicleSpec {
    pub fn car(turn_rate: f64) -> Self {
        Self::bare(VehicleKind::Car).with(|v| v.turn_rate = Some(turn_rate))
    }

    pub fn airplane(turn_rate_xy: f64, climb_rate_z: f64) -> Self {
        Self::bare(VehicleKind::Airplane).with(|v| {
            v.turn_rate_xy = Some(turn_rate_xy);
            v.climb_rate_z = Some(climb_rate_z);
        })
    }

    pub fn submarine(curvature: f64) -> Self {
        Self::bare(VehicleKind::Submarine).with(|v| v.curvature = Some(curvature))
    }

    fn bare(kind: VehicleKind) -> Self {
        Self {
            kind,
            turn_rate: None,
            turn_rate_xy: None,
            climb_rate_z: None,
            curvature: None,
            epsilon: None,
        }
    }

    fn with(mut self, f: impl FnOnce(&mut Self)) -> Self {
        f(&mut self);
        self
    }

    pub fn model(&self) -> Result<VehicleModel> {
        let fields = [
            ("turn_rate", self.turn_rate, VehicleKind::Car),
            ("turn_rate_xy", self.turn_rate_xy, VehicleKind::Airplane),
            ("climb_rate_z", self.climb_rate_z, VehicleKind::Airplane),
            ("curvature", self.curvature, VehicleKind::Submarine),
            ("epsilon", self.epsilon, VehicleKind::Submarine),
        ];
        for (name, value, owner) in fields {
            if value.is_some() && owner != self.kind {
                return Err(PlanError::scenario(
                    format!("vehicle.{name}"),
                    format!("not a parameter of the {} model", self.kind),
                ));
            }
        }
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| {
                PlanError::scenario(
                    format!("vehicle.{name}"),
                    format!("required for the {} model", self.kind),
                )
            })
        };
        let wrap = |name: &str, r: Result<VehicleModel>| {
            r.map_err(|e| PlanError::scenario(format!("vehicle.{name}"), e.to_string()))
        };
        match self.kind {
            VehicleKind::Car => wrap(
                "turn_rate",
                VehicleModel::car(need("turn_rate", self.turn_rate)?),
            ),
            VehicleKind::Airplane => wrap(
                "turn_rate_xy",
                VehicleModel::airplane(
                    need("turn_rate_xy", self.turn_rate_xy)?,
                    need("climb_rate_z", self.climb_rate_z)?,
                ),
            ),
            VehicleKind::Submarine => {
                let m = wrap(
                    "curvature",
                    VehicleModel::submarine(need("curvature", self.curvature)?),
                )?;
                wrap(
                    "epsilon",
                    m.with_epsilon(self.epsilon.unwrap_or(DEFAULT_EPSILON)),
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub t_lo: f64,
    pub t_hi: f64,
    pub reach_tol: f64,
    #[serde(default)]
    pub mode: HorizonSearch,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steepness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raster: Option<RasterSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub balls: Vec<MovingBall>,
}

impl ObstacleSpec {
    pub fn is_empty(&self) -> bool {
        self.steepness.is_none() && self.raster.is_none() && self.balls.is_empty()
    }
}

/// Occupancy raster decomposed into static balls at load time. Relative
/// paths are resolved against the scenario file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterSpec {
    pub path: PathBuf,
    pub origin: Vec<f64>,
    pub cell_size: f64,
    pub r_min: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_gd: Option<usize>,
}

impl SolverOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

impl Scenario {
    pub fn model(&self) -> Result<VehicleModel> {
        self.vehicle.model()
    }

    pub fn kind(&self) -> VehicleKind {
        self.vehicle.kind
    }

    /// Listed balls followed by the balls decomposed from the raster.
    pub fn all_balls(&self) -> Vec<MovingBall> {
        let mut balls = self.obstacles.balls.clone();
        balls.extend(self.decomposed.iter().cloned());
        balls
    }

    pub fn obstacle_set(&self) -> Result<ObstacleSet> {
        let dim = self.model()?.spatial_dim();
        ObstacleSet::new(dim, self.all_balls())?
            .with_steepness(self.obstacles.steepness.unwrap_or(DEFAULT_STEEPNESS))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let o = &self.solver;
        let d = SolverConfig::default();
        SolverConfig {
            sigma: o.sigma.unwrap_or(d.sigma),
            tau: o.tau.unwrap_or(d.tau),
            kappa: o.kappa.unwrap_or(d.kappa),
            delta: o.delta.unwrap_or(d.delta),
            tol: o.tol.unwrap_or(d.tol),
            max_iters: o.max_iters.unwrap_or(d.max_iters),
            eta: o.eta.unwrap_or(d.eta),
            n_gd: o.n_gd.unwrap_or(d.n_gd),
            seed: self.seed,
        }
    }

    /// Copy with the raster replaced by its decomposed balls, so the file
    /// stands alone.
    pub fn resolved(&self) -> Scenario {
        let mut s = self.clone();
        s.obstacles.balls = self.all_balls();
        s.obstacles.raster = None;
        s.decomposed.clear();
        s
    }

    /// Checks everything the schema cannot express.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(PlanError::scenario(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCENARIO_SCHEMA_VERSION}",
                    self.schema_version
                ),
            ));
        }
        if self.id.trim().is_empty() {
            return Err(PlanError::scenario("id", "must not be empty"));
        }
        let model = self.model()?;
        let d = model.state_dim();
        for (field, v) in [("start", &self.start), ("goal", &self.goal)] {
            if v.len() != d {
                return Err(PlanError::DimensionMismatch {
                    what: field,
                    expected: d,
                    got: v.len(),
                });
            }
            if let Some(i) = v.iter().position(|a| !a.is_finite()) {
                return Err(PlanError::scenario(
                    format!("{field}[{i}]"),
                    "must be finite",
                ));
            }
        }
        match self.horizon {
            Horizon::Fixed(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(PlanError::scenario(
                    "horizon",
                    format!("must be positive, got {t}"),
                ));
            }
            Horizon::Auto(_) => {
                let s = self.horizon_search.ok_or_else(|| {
                    PlanError::scenario("horizon_search", "required when horizon = \"auto\"")
                })?;
                if !(s.t_lo > 0.0 && s.t_lo < s.t_hi && s.t_hi.is_finite()) {
                    return Err(PlanError::scenario(
                        "horizon_search",
                        format!(
                            "bracket must satisfy 0 < t_lo < t_hi, got [{}, {}]",
                            s.t_lo, s.t_hi
                        ),
                    ));
                }
                if !(s.reach_tol >= 0.0) {
                    return Err(PlanError::scenario(
                        "horizon_search.reach_tol",
                        "must be non-negative",
                    ));
                }
            }
            _ => {}
        }
        let ds = model.spatial_dim();
        for (i, b) in self.obstacles.balls.iter().enumerate() {
            b.validate(ds)
                .map_err(|e| PlanError::scenario(format!("obstacles.balls[{i}]"), e.to_string()))?;
        }
        if let Some(k) = self.obstacles.steepness {
            if !(k > 0.0 && k.is_finite()) {
                return Err(PlanError::scenario(
                    "obstacles.steepness",
                    "must be positive",
                ));
            }
        }
        if let Some(r) = &self.obstacles.raster {
            if r.origin.len() != ds {
                return Err(PlanError::scenario(
                    "obstacles.raster.origin",
                    format!("expected {ds} components, got {}", r.origin.len()),
                ));
            }
        }
        self.solver_config()
            .validate()
            .map_err(|e| PlanError::scenario("solver", e.to_string()))
    }
}

/// Parses and validates scenario text. `base_dir` anchors relative raster
/// paths.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| PlanError::scenario("<document>", e.to_string()))?;
    let mut scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        PlanError::scenario(path, e.into_inner().to_string())
    })?;
    scenario.validate()?;
    if let Some(r) = &scenario.obstacles.raster {
        let path = if r.path.is_absolute() {
            r.path.clone()
        } else {
            base_dir.join(&r.path)
        };
        let region = RasterRegion::load(&path, r.origin.clone(), r.cell_size)
            .map_err(|e| PlanError::scenario("obstacles.raster.path", e.to_string()))?;
        scenario.decomposed = decompose_region(&region, r.r_min)
            .map_err(|e| PlanError::scenario("obstacles.raster.r_min", e.to_string()))?;
    }
    Ok(scenario)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&text, base).map_err(|e| match e {
        PlanError::Scenario { field, message } => PlanError::Scenario {
            field,
            message: format!("{message} (in {})", path.display()),
        },
        other => other,
    })
}

pub fn scenario_to_string(scenario: &Scenario) -> Result<String> {
    toml::to_string(scenario).map_err(|e| PlanError::scenario("<document>", e.to_string()))
}

pub fn write_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    fs::write(path, scenario_to_string(scenario)?)?;
    Ok(())
}

/// Outcome of one scenario, as written to `summary.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub scenario_id: String,
    pub vehicle: VehicleKind,
    pub seed: u64,
    pub horizon: f64,
    pub steps: usize,
    pub delta: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_change: f64,
    pub wall_time: f64,
    pub terminal_distance: f64,
    pub min_clearance: f64,
    pub obstacles: Vec<MovingBall>,
}

/// Solver output together with the objects it was computed from.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub model: VehicleModel,
    pub obstacles: ObstacleSet,
    pub horizon: f64,
    pub result: SolveResult,
}

impl ScenarioRun {
    pub fn summary(&self, scenario: &Scenario) -> RunSummary {
        let r = &self.result;
        RunSummary {
            schema_version: SUMMARY_SCHEMA_VERSION,
            scenario_id: scenario.id.clone(),
            vehicle: self.model.kind(),
            seed: r.seed,
            horizon: self.horizon,
            steps: r.trajectory.steps(),
            delta: r.trajectory.delta,
            value: r.value,
            iterations: r.iterations,
            converged: r.converged,
            final_change: r.change_history.last().copied().unwrap_or(f64::NAN),
            wall_time: r.wall_time,
            terminal_distance: r.terminal_distance(&scenario.goal),
            min_clearance: r.min_clearance(&self.model, &self.obstacles),
            obstacles: self.obstacles.balls().to_vec(),
        }
    }
}

/// Resolves the horizon (searching if it is `"auto"`) and solves.
pub fn solve_scenario(scenario: &Scenario) -> Result<ScenarioRun> {
    let model = scenario.model()?;
    let obstacles = scenario.obstacle_set()?;
    let cfg = scenario.solver_config();
    let horizon = match scenario.horizon {
        Horizon::Fixed(t) => t,
        Horizon::Auto(_) => {
            let s = scenario.horizon_search.ok_or_else(|| {
                PlanError::scenario("horizon_search", "required when horizon = \"auto\"")
            })?;
            find_min_horizon(
                &model,
                &obstacles,
                &scenario.start,
                &scenario.goal,
                &cfg,
                s.t_lo,
                s.t_hi,
                s.reach_tol,
                s.mode,
            )?
        }
    };
    let result = solve(
        &model,
        &obstacles,
        &scenario.start,
        &scenario.goal,
        horizon,
        &cfg,
    )?;
    Ok(ScenarioRun {
        model,
        obstacles,
        horizon,
        result,
    })
}

/// Solves a scenario and writes its output files into `output_dir`.
pub fn run(scenario: &Scenario, output_dir: &Path) -> Result<RunSummary> {
    let wrap = |e: PlanError| PlanError::Run {
        id: scenario.id.clone(),
        source: Box::new(e),
    };
    let solved = solve_scenario(scenario).map_err(wrap)?;
    let summary = solved.summary(scenario);
    fs::create_dir_all(output_dir)?;
    write_trajectory(&solved, &output_dir.join(TRAJECTORY_FILE))?;
    write_summary(&summary, &output_dir.join(SUMMARY_FILE))?;
    write_scenario(
        &scenario.resolved(),
        &output_dir.join(RESOLVED_SCENARIO_FILE),
    )?;
    Ok(summary)
}

/// Header of the trajectory file for a model.
pub fn trajectory_header(model: &VehicleModel) -> Vec<String> {
    let names = model.state_names();
    let mut cols = vec!["j".to_string(), "t".to_string(), "t_physical".to_string()];
    cols.extend(names.iter().map(|n| n.to_string()));
    cols.extend(names.iter().map(|n| format!("p_{n}")));
    cols.push("free_space".to_string());
    cols
}

/// One row per path node `j = 0..=N`: equation time `jδ`, physical time
/// `T − jδ`, state, costate and the smoothed free-space indicator.
pub fn write_trajectory(run: &ScenarioRun, path: &Path) -> Result<()> {
    let traj = &run.result.trajectory;
    let ds = run.model.spatial_dim();
    let n = traj.steps();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(trajectory_header(&run.model))?;
    for j in 0..=n {
        let t = traj.time(j);
        let mut row = vec![j.to_string(), t.to_string(), traj.time(n - j).to_string()];
        row.extend(traj.states[j].iter().map(f64::to_string));
        row.extend(traj.costates[j].iter().map(f64::to_string));
        row.push(
            run.obstacles
                .smooth_indicator(&traj.states[j][..ds], t)
                .to_string(),
        );
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(summary: &RunSummary, path: &Path) -> Result<()> {
    let text =
        toml::to_string(summary).map_err(|e| PlanError::scenario("<summary>", e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct BallList<'a> {
    balls: &'a [MovingBall],
}

/// `[[balls]]` tables, the same layout as `obstacles.balls` in a scenario.
pub fn balls_to_toml(balls: &[MovingBall]) -> Result<String> {
    toml::to_string(&BallList { balls }).map_err(|e| PlanError::scenario("<balls>", e.to_string()))
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| PlanError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
