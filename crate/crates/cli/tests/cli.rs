//! End-to-end checks of the installed binary: artifact files, stdout
//! summaries, exit codes.

use std::path::Path;
use std::process::Command;

fn floqsym() -> Command {
    Command::new(env!("CARGO_BIN_EXE_floqsym"))
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn measures_command_prints_the_summary_and_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "pnf.cfg",
        "[model]\npreset = pnf\n[solver]\nsettle_horizon = 200\n[output]\nprefix = pnf\n",
    );
    let out = floqsym()
        .args(["measures", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("res"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    // The orthogonal norm-form case: Λ ≤ 1e-10 and Υ ≤ 1e-6 on stdout.
    let lambda: f64 = stdout
        .split_whitespace()
        .find_map(|t| t.strip_prefix("lambda=").map(|v| v.parse().unwrap()))
        .expect("lambda in summary");
    let upsilon: f64 = stdout
        .split_whitespace()
        .find_map(|t| t.strip_prefix("upsilon=").map(|v| v.parse().unwrap()))
        .expect("upsilon in summary");
    assert!(lambda <= 1e-10 && upsilon <= 1e-6, "{stdout}");
    assert!(tmp.path().join("res/pnf_measures.csv").exists());
    assert!(tmp.path().join("res/pnf_theta.csv").exists());
}

#[test]
fn pss_command_emits_orbit_projections() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "pnf.cfg",
        "[model]\npreset = pnf\n[solver]\nsettle_horizon = 200\n[output]\nprefix = orb\n",
    );
    let out = floqsym()
        .args(["pss", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("res"))
        .output()
        .unwrap();
    assert!(out.status.success());
    for artifact in ["orb_orbit.csv", "orb_orbit_xy.svg", "orb_orbit_xy3.svg", "orb_orbit_xy4.svg"] {
        assert!(tmp.path().join("res").join(artifact).exists(), "{artifact} missing");
    }
    let svg = std::fs::read_to_string(tmp.path().join("res/orb_orbit_xy.svg")).unwrap();
    assert!(svg.contains("<path"));
}

#[test]
fn sweep_command_writes_the_full_artifact_set_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "cex.cfg",
        "[model]\npreset = counterexample\n[solver]\nsettle_horizon = 100\n\
         [sweep]\ngrid = mu 0.4:0.6:2\ngrid = kappa 0.0:0.3:2\n[output]\nprefix = cex\n",
    );
    let artifacts = [
        "cex_table.csv",
        "cex_lambda_db.csv",
        "cex_upsilon_db.csv",
        "cex_scatter.csv",
        "cex_lambda_db.svg",
        "cex_upsilon_db.svg",
        "cex_scatter.svg",
    ];
    // Identical invocations (same --out) must produce identical bytes.
    let run = || -> Vec<Vec<u8>> {
        let out = floqsym()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join("res"))
            .arg("--jobs")
            .arg("2")
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        artifacts
            .iter()
            .map(|a| std::fs::read(tmp.path().join("res").join(a)).unwrap())
            .collect()
    };
    let first = run();
    let second = run();
    for ((a, b), name) in first.iter().zip(&second).zip(artifacts) {
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // 2×2 grid: header + 4 rows after the echo block.
    let table = std::fs::read_to_string(tmp.path().join("res/cex_table.csv")).unwrap();
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn search_command_writes_json_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "search.cfg",
        "[model]\npreset = counterexample\n[solver]\nsettle_horizon = 100\n\
         [search]\nfree = mu\nstart = 0.5\nbudget = 60\n[output]\nprefix = s\n",
    );
    let out = floqsym()
        .args(["search", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("res"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("false_positive=true"), "{stdout}");
    let log = std::fs::read_to_string(tmp.path().join("res/s_search.jsonl")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert!(lines.len() >= 2);
    for line in &lines {
        serde_json::from_str::<serde_json::Value>(line).expect("each line is JSON");
    }
    assert!(lines.last().unwrap().contains("\"result\""));
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "bad.cfg", "[model]\npreset = gremlin\n");
    let out = floqsym().args(["measures", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let cfg = write_cfg(tmp.path(), "bad2.cfg", "[model]\npreset = vdp\n[solver]\nnope = 3\n");
    let out = floqsym().args(["measures", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_parameter_values_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "fail.cfg", "[model]\npreset = counterexample\n");
    let out = floqsym()
        .args(["measures", "--config"])
        .arg(&cfg)
        .args(["--set", "mu=-0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solver_failures_exit_with_code_three() {
    // ε = 0 is a linear center: the cycle is non-hyperbolic, so shooting
    // hits a singular Jacobian or diverges. Either way the exit code is 3.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "fail.cfg",
        "[model]\npreset = vdp\neps = 0\n[solver]\nsettle_horizon = 50\n",
    );
    let out = floqsym()
        .args(["measures", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("res"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_config_file_exits_with_code_four() {
    let out = floqsym().args(["pss", "--config", "/nonexistent/x.cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}
