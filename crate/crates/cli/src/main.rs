use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use hopf_plan::obstacles::RasterRegion;
use hopf_plan::scenario::{balls_to_toml, Horizon, SearchSpec};
use hopf_plan::solver::HorizonSearch;
use hopf_plan::{
    decompose_region, find_min_horizon, load_scenario, run, PlanError, RunSummary, Scenario,
};

const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "hopf-plan",
    version,
    about = "Curvature-constrained path planning for Dubins-type vehicles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write its trajectory and summary.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        output: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Search for the smallest horizon that reaches the goal.
    MinHorizon {
        #[arg(long)]
        scenario: PathBuf,
        /// Also solve at the found horizon and write the output files here.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        t_lo: Option<f64>,
        #[arg(long)]
        t_hi: Option<f64>,
        #[arg(long)]
        reach_tol: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[command(flatten)]
        common: Common,
    },
    /// Split an occupancy raster into disjoint balls.
    Decompose {
        /// Text grid (.txt/.grid) or image file.
        #[arg(long)]
        raster: PathBuf,
        /// Coordinates of the grid's lower corner, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        origin: Vec<f64>,
        #[arg(long)]
        cell_size: f64,
        #[arg(long)]
        r_min: f64,
        /// Write the balls here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve several scenarios concurrently, one output directory each.
    Batch {
        /// Scenario files or directories containing `*.toml` scenarios.
        #[arg(long, required = true, num_args = 1..)]
        scenario: Vec<PathBuf>,
        #[arg(long, default_value = "out")]
        output: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn apply(&self, s: &mut Scenario) {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(tol) = self.tol {
            s.solver.tol = Some(tol);
        }
        if let Some(k) = self.max_iters {
            s.solver.max_iters = Some(k);
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Bisection,
    LinearScan,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Solve {
            scenario,
            output,
            common,
        } => {
            let mut s = load_scenario(&scenario)?;
            common.apply(&mut s);
            let summary = run(&s, &output)?;
            if !common.quiet {
                print_summary(&summary, &output);
            }
            Ok(status(summary.converged))
        }
        Command::MinHorizon {
            scenario,
            output,
            t_lo,
            t_hi,
            reach_tol,
            mode,
            common,
        } => {
            let mut s = load_scenario(&scenario)?;
            common.apply(&mut s);
            let base = s.horizon_search;
            let spec = SearchSpec {
                t_lo: t_lo
                    .or(base.map(|b| b.t_lo))
                    .context("no --t-lo and no [horizon_search] in the scenario")?,
                t_hi: t_hi
                    .or(base.map(|b| b.t_hi))
                    .context("no --t-hi and no [horizon_search] in the scenario")?,
                reach_tol: reach_tol.or(base.map(|b| b.reach_tol)).unwrap_or(0.1),
                mode: match mode {
                    Some(Mode::Bisection) => HorizonSearch::Bisection,
                    Some(Mode::LinearScan) => HorizonSearch::LinearScan,
                    None => base.map(|b| b.mode).unwrap_or_default(),
                },
            };
            let found = find_min_horizon(
                &s.model()?,
                &s.obstacle_set()?,
                &s.start,
                &s.goal,
                &s.solver_config(),
                spec.t_lo,
                spec.t_hi,
                spec.reach_tol,
                spec.mode,
            );
            let t = match found {
                Ok(t) => t,
                Err(e @ PlanError::NotReachable { .. }) => {
                    if !common.quiet {
                        println!("{}: {e}", s.id);
                    }
                    return Ok(ExitCode::from(EXIT_NOT_CONVERGED));
                }
                Err(e) => return Err(e.into()),
            };
            if !common.quiet {
                println!("{}: minimal horizon {t}", s.id);
            }
            if let Some(dir) = output {
                s.horizon = Horizon::Fixed(t);
                let summary = run(&s, &dir)?;
                if !common.quiet {
                    print_summary(&summary, &dir);
                }
                return Ok(status(summary.converged));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Decompose {
            raster,
            origin,
            cell_size,
            r_min,
            output,
        } => {
            let region = RasterRegion::load(&raster, origin, cell_size)?;
            let balls = decompose_region(&region, r_min)?;
            let text = balls_to_toml(&balls)?;
            match output {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Batch {
            scenario,
            output,
            workers,
            common,
        } => batch(&scenario, &output, workers, &common),
    }
}

fn batch(
    inputs: &[PathBuf],
    output: &Path,
    workers: Option<usize>,
    common: &Common,
) -> anyhow::Result<ExitCode> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "toml"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    if files.is_empty() {
        bail!("no scenario files found");
    }
    let mut scenarios = Vec::with_capacity(files.len());
    for f in &files {
        let mut s = load_scenario(f)?;
        common.apply(&mut s);
        scenarios.push(s);
    }
    let mut ids: Vec<&str> = scenarios.iter().map(|s| s.id.as_str()).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        bail!("duplicate scenario id `{}`", w[0]);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()?;
    let results: Vec<_> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| {
                let dir = output.join(&s.id);
                (dir.clone(), run(s, &dir))
            })
            .collect()
    });

    let mut all_converged = true;
    let mut failed = false;
    for (dir, r) in results {
        match r {
            Ok(summary) => {
                all_converged &= summary.converged;
                if !common.quiet {
                    print_summary(&summary, &dir);
                }
            }
            Err(e) => {
                failed = true;
                eprintln!("error: {e}");
            }
        }
    }
    Ok(if failed {
        ExitCode::FAILURE
    } else {
        status(all_converged)
    })
}

fn status(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_CONVERGED)
    }
}

fn print_summary(s: &RunSummary, dir: &Path) {
    println!(
        "{}: {} after {} iterations, u = {:.6}, terminal distance {:.4}, min free-space {:.3}, T = {}, {:.2}s -> {}",
        s.scenario_id,
        if s.converged { "converged" } else { "not converged" },
        s.iterations,
        s.value,
        s.terminal_distance,
        s.min_clearance,
        s.horizon,
        s.wall_time,
        dir.display()
    );
}
