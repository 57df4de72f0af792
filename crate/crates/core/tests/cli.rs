use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dark-pairing");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_in(out: &Path, cfg: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.json");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn verify_minimal_passes_all_ten_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &config("minimal.json"), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 10);
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert!(fs::read_to_string(dir.path().join("report.txt")).unwrap().contains("overall: pass"));
}

#[test]
fn broken_formfactor_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &config("broken_formfactor.json"), &["verify"]);
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let check = report["checks"].as_array().unwrap().iter().find(|c| c["id"] == "interaction_annihilates_nc").unwrap();
    assert_eq!(check["passed"], false);
    assert!(check["residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn delta_reaching_origin_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"lattice": {"k_fermi": 1, "delta": 1}}"#);
    let out = run_in(dir.path(), &cfg, &["verify"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("must exceed Delta"), "{stderr}");
}

#[test]
fn malformed_config_and_arguments_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{not json");
    assert_eq!(run_in(dir.path(), &cfg, &["verify"]).status.code(), Some(2));
    assert_eq!(run(&["verify"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn basis_cap_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"lattice": {"k_fermi": 1, "delta": "1/2", "support": [[0,0,1]]}, "caps": {"basis": 5}}"#,
    );
    let out = run_in(dir.path(), &cfg, &["spectrum", "--g", "-1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unwritable_output_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = run_in(&blocker.join("sub"), &config("minimal.json"), &["modes"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn lanczos_iteration_limit_exits_five() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"lattice": {"k_fermi": 1, "delta": "1/2", "support": [[0,0,1],[0,1,0]]},
            "formfactor": "random:3", "caps": {"dense": 1, "iterations": 2}}"#,
    );
    let out = run_in(dir.path(), &cfg, &["spectrum", "--g", "-1"]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn non_hermitian_spectrum_exits_six() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &config("broken_formfactor.json"), &["spectrum", "--g", "1"]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn scan_minimal_has_constant_pair_energy() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &config("minimal.json"), &["scan", "--g-list", "-1,-1/2,0,1/2,1"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "g,sector,dim,E_ground,E_NC,E_var,residual_NC");
    assert_eq!(lines.len(), 6);
    let col = |line: &str, i: usize| line.split(',').nth(i).unwrap().parse::<f64>().unwrap();
    for line in &lines[1..] {
        assert_eq!(col(line, 4), 2.0);
        // 2 eps + min(0, 2g)
        let g = col(line, 0);
        assert!((col(line, 3) - (2.0 + (2.0 * g).min(0.0))).abs() < 1e-10);
    }
}

#[test]
fn spectrum_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &config("minimal.json"), &["spectrum", "--g", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let levels = fs::read_to_string(dir.path().join("levels.csv")).unwrap();
    assert_eq!(levels, "energy,multiplicity\n2,6\n");
    let spectrum = fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 7);
}

#[test]
fn continuum_needs_no_config() {
    let dir = tempfile::tempdir().unwrap();
    let out =
        run(&["--out", dir.path().to_str().unwrap(), "continuum", "--kf", "1", "--delta", "1/10", "--sizes", "4,8"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("continuum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = config("two_pair.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        assert_eq!(run_in(dir, &cfg, &["verify"]).status.code(), Some(0));
        assert_eq!(run_in(dir, &cfg, &["--threads", "2", "scan"]).status.code(), Some(0));
        assert_eq!(run_in(dir, &cfg, &["continuum", "--sizes", "4,8"]).status.code(), Some(0));
    }
    for name in ["report.json", "report.txt", "scan.csv", "scan.json", "continuum.csv", "continuum.json", "config.json"]
    {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}
