//! End-to-end behavior of the binary: artifact layout, config handling and
//! exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_fraclab")
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fraclab-cli-{name}"));
    std::fs::remove_dir_all(&dir).ok();
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SOLVE_CONFIG: &str = r#"
[domain]
a = 0.0
b = 1.0

[grid]
n = 127

[operator]
alpha = 2.0

[nonlinearity]
kind = "pure_power"
gamma = 1.0
c1 = 1.0
c2 = 1.0
monotone = true

[measure]
density_id = "constant"
density_params = [1.0]

[solver]
max_level = 1024
force_all_levels = true
"#;

#[test]
fn solve_emits_artifacts_and_summary() {
    let dir = tmp_dir("solve");
    let cfg = write_config(&dir, "run.toml", SOLVE_CONFIG);
    let out = dir.join("out");
    let status = Command::new(binary())
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(csv.starts_with("# schema=v1\nx,u\n"));
    assert_eq!(csv.lines().count(), 2 + 127);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("solve_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["command"], "solve");
    // The echoed config re-parses to the same configuration.
    let echo = summary["config_echo"].as_str().unwrap();
    let reparsed = fraclab_cli::RunConfig::parse_toml(echo).unwrap();
    assert_eq!(reparsed.grid.n, 127);
}

#[test]
fn identical_seeds_give_bitwise_identical_artifacts() {
    let dir = tmp_dir("deterministic");
    let body = format!(
        "{SOLVE_CONFIG}\n[mc]\nsamples = 5000\ndt = 1e-4\nseed = 99\npoints = [0.5]\nallowance = 2e-3\n"
    );
    let cfg = write_config(&dir, "run.toml", &body);
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("out{run}"));
        let status = Command::new(binary())
            .args(["mc-verify", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(
            status.status.success(),
            "{}",
            String::from_utf8_lossy(&status.stderr)
        );
        outputs.push(std::fs::read(out.join("mc.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_override_changes_the_estimate() {
    let dir = tmp_dir("seed-override");
    let body = format!(
        "{SOLVE_CONFIG}\n[mc]\nsamples = 5000\ndt = 1e-4\nseed = 99\npoints = [0.5]\nallowance = 2e-3\n"
    );
    let cfg = write_config(&dir, "run.toml", &body);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for (out, seed) in [(&out_a, "99"), (&out_b, "100")] {
        let status = Command::new(binary())
            .args(["mc-verify", "--config"])
            .arg(&cfg)
            .args(["--seed", seed])
            .arg("--out")
            .arg(out)
            .output()
            .unwrap();
        assert!(status.status.success());
    }
    let a = std::fs::read(out_a.join("mc.csv")).unwrap();
    let b = std::fs::read(out_b.join("mc.csv")).unwrap();
    assert_ne!(a, b, "different seeds must produce different estimates");
}

#[test]
fn unknown_key_exits_with_config_code_and_names_key() {
    let dir = tmp_dir("badkey");
    let cfg = write_config(
        &dir,
        "bad.toml",
        &SOLVE_CONFIG.replace("[grid]\nn = 127", "[grid]\nn = 127\nwidth = 3"),
    );
    let output = Command::new(binary())
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("width"),
        "must name the offending key: {stderr}"
    );
}

#[test]
fn trivial_measure_is_a_config_error() {
    let dir = tmp_dir("trivial");
    let cfg = write_config(
        &dir,
        "trivial.toml",
        &SOLVE_CONFIG.replace("density_params = [1.0]", "density_params = [0.0]"),
    );
    let output = Command::new(binary())
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn exhausted_levels_exit_with_solver_code() {
    let dir = tmp_dir("nonconv");
    let cfg = write_config(
        &dir,
        "shallow.toml",
        &SOLVE_CONFIG.replace(
            "max_level = 1024\nforce_all_levels = true",
            "max_level = 4\nouter_tol = 1e-14",
        ),
    );
    let output = Command::new(binary())
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn accept_rejects_empty_config_dir() {
    let dir = tmp_dir("accept-empty");
    let empty = dir.join("configs");
    std::fs::create_dir_all(&empty).unwrap();
    let output = Command::new(binary())
        .args(["accept", "--config-dir"])
        .arg(&empty)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn accept_rejects_corrupted_reference_config() {
    let dir = tmp_dir("accept-corrupt");
    let configs = dir.join("configs");
    std::fs::create_dir_all(&configs).unwrap();
    std::fs::write(
        configs.join("crit01.toml"),
        "[domain]\na = 0.0\nb = 1.0\nbogus_key = 1\n[grid]\nn = 8\n[operator]\nalpha = 2.0\n",
    )
    .unwrap();
    let output = Command::new(binary())
        .args(["accept", "--config-dir"])
        .arg(&configs)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("bogus_key"), "{stderr}");
}

#[test]
fn bracket_and_capacity_commands_run() {
    let dir = tmp_dir("bracket");
    let body = SOLVE_CONFIG.replace("c2 = 1.0", "c2 = 2.0");
    let cfg = write_config(&dir, "bracket.toml", &body);
    let out = dir.join("out");
    let status = Command::new(binary())
        .args(["bracket", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(
        status.status.success(),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = std::fs::read_to_string(out.join("bracket.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("x,v,u,w,slack"));

    let cap_body = r#"
[domain]
a = 0.0
b = 1.0

[grid]
n = 255

[operator]
alpha = 2.0

[capacity]
x0 = 0.5
sizes = [63, 127, 255]
"#;
    let cap_cfg = write_config(&dir, "capacity.toml", cap_body);
    let status = Command::new(binary())
        .args(["capacity", "--config"])
        .arg(&cap_cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success());
    let csv = std::fs::read_to_string(out.join("capacity.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let value: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(
        (value - 4.0).abs() < 1e-8,
        "aligned point capacity: {value}"
    );
}

#[test]
fn stability_command_runs_tv_mode() {
    let dir = tmp_dir("stability");
    let body = format!(
        "{SOLVE_CONFIG}\n[stability]\nmode = \"tv\"\ntv_factors = [1, 2, 4, 8]\n"
    );
    let cfg = write_config(&dir, "tv.toml", &body);
    let out = dir.join("out");
    let status = Command::new(binary())
        .args(["stability", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let csv = std::fs::read_to_string(out.join("stability.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("level,N,epsilon,distance,max_u,verdict"));
    assert_eq!(csv.lines().count(), 2 + 4);
}
