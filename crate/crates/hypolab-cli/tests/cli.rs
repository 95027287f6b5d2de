use std::path::Path;
use std::process::Command;

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .display()
        .to_string()
}

fn hypolab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hypolab")).args(args).output().unwrap()
}

#[test]
fn steady_state_subcommand_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypolab(&["steady-state", "--config", &config("alpha2_linear.toml"), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("steady_state.csv").exists());
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn inadmissible_potential_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = hypolab(&["check-assumptions", "--config", &config("alpha1_linear.toml"), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
}

#[test]
fn missing_config_is_an_error() {
    let out = hypolab(&["simulate"]);
    assert!(!out.status.success());
}

#[test]
fn seed_flag_changes_random_profile() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("alpha2_linear.toml");
    for (dir, seed) in [(&a, "1"), (&b, "2")] {
        let out = hypolab(&["simulate", "--config", &cfg, "--out", dir.path().to_str().unwrap(), "--seed", seed, "--workers", "1"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    }
    let x = std::fs::read(a.path().join("series_linear.csv")).unwrap();
    let y = std::fs::read(b.path().join("series_linear.csv")).unwrap();
    assert_ne!(x, y);
}
