use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hopf-plan"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn exec(cmd: &mut Command) -> Output {
    cmd.output().expect("failed to launch hopf-plan")
}

#[test]
fn solve_writes_output_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(
        bin()
            .args(["solve", "--scenario"])
            .arg(scenario("car_free.toml"))
            .arg("--output")
            .arg(dir.path()),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["trajectory.csv", "summary.toml", "scenario.toml"] {
        assert!(dir.path().join(f).is_file(), "missing {f}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("car_free: converged"), "{stdout}");
}

#[test]
fn iteration_cap_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(
        bin()
            .args(["solve", "--quiet", "--max-iters", "1", "--scenario"])
            .arg(scenario("car_free.toml"))
            .arg("--output")
            .arg(dir.path()),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let summary = fs::read_to_string(dir.path().join("summary.toml")).unwrap();
    assert!(summary.contains("converged = false"));
}

#[test]
fn bad_scenario_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "schema_version = 1\nid = \"bad\"\nstart = [0.0]\n").unwrap();
    let out = exec(
        bin()
            .args(["solve", "--scenario"])
            .arg(&path)
            .arg("--output")
            .arg(dir.path().join("o")),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));

    let out = exec(
        bin()
            .args(["solve", "--scenario"])
            .arg(dir.path().join("missing.toml")),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn seed_override_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = exec(
            bin()
                .args(["solve", "--quiet", "--seed", seed, "--scenario"])
                .arg(scenario("car_free.toml"))
                .arg("--output")
                .arg(dir.path().join(sub)),
        );
        assert_eq!(out.status.code(), Some(0));
        fs::read_to_string(dir.path().join(sub).join("summary.toml")).unwrap()
    };
    let a = run("3", "a");
    assert!(a.contains("seed = 3"));
    assert!(run("4", "b").contains("seed = 4"));
}

#[test]
fn decompose_prints_balls() {
    let out = exec(
        bin()
            .args(["decompose", "--raster"])
            .arg(scenario("regions/pillar.txt"))
            .args([
                "--origin",
                "-0.5,0.5",
                "--cell-size",
                "0.05",
                "--r-min",
                "0.1",
            ]),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[[balls]]"), "{text}");
    assert!(text.contains("radius"));

    let out = exec(
        bin()
            .args(["decompose", "--raster"])
            .arg(scenario("regions/pillar.txt"))
            .args(["--origin", "0,0", "--cell-size", "0.05", "--r-min", "0.01"]),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn batch_runs_each_scenario_into_its_own_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = exec(
        bin()
            .args(["batch", "--quiet", "--workers", "2", "--scenario"])
            .arg(scenario("car_free.toml"))
            .arg(scenario("airplane_landing.toml"))
            .arg("--output")
            .arg(dir.path()),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("car_free/trajectory.csv").is_file());
    assert!(dir.path().join("airplane_landing/trajectory.csv").is_file());

    let dup = exec(
        bin()
            .args(["batch", "--scenario"])
            .arg(scenario("car_free.toml"))
            .arg(scenario("car_free.toml"))
            .arg("--output")
            .arg(dir.path().join("dup")),
    );
    assert_eq!(dup.status.code(), Some(1));
}

#[test]
fn min_horizon_reports_the_search_result() {
    let out = exec(
        bin()
            .args(["min-horizon", "--scenario"])
            .arg(scenario("car_min_horizon.toml")),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    let t: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((t - 2.0).abs() <= 0.2, "{text}");

    let out = exec(
        bin()
            .args([
                "min-horizon",
                "--quiet",
                "--t-lo",
                "0.5",
                "--t-hi",
                "1.0",
                "--scenario",
            ])
            .arg(scenario("car_min_horizon.toml")),
    );
    assert_eq!(out.status.code(), Some(2));
}
