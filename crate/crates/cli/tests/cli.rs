use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn memsx(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memsx"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn with_config(json: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), json).unwrap();
    dir
}

fn data_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn zero_voltage_simulation_stays_flat() {
    let dir = with_config(r#"{"model": {"params": {"lambda": 0.0}}, "dynamics": {"stepping": {"t_end": 0.1, "stop_at_steady": false}}}"#);
    let out = memsx(&["simulate", "cfg.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = data_rows(&dir.path().join("o/snapshots.csv"));
    assert!(rows.len() > 65);
    assert!(rows.iter().all(|r| r[2] == 0.0));
}

#[test]
fn classical_touchdown_exits_with_4() {
    let dir = with_config(r#"{"model": {"params": {"lambda": 20.0}}, "geometry": {"n_x": 31}, "dynamics": {"stepping": {"t_end": 5.0}}}"#);
    let out = memsx(&["simulate", "--config", "cfg.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(4));
    // the classical energy is singular at contact; the last snapshot records it
    let snaps = data_rows(&dir.path().join("o/snapshots.csv"));
    let t_last = snaps.last().unwrap()[0];
    assert!(t_last < 5.0);
    let min_last = snaps.iter().filter(|r| r[0] == t_last).map(|r| r[2]).fold(f64::INFINITY, f64::min);
    assert!(min_last <= -1.0 + 1e-9);
}

#[test]
fn pullin_is_reproducible_to_the_byte() {
    let dir = with_config("{}");
    let a = memsx(&["pullin", "cfg.json", "--out", "a", "--jobs", "2"], dir.path());
    let b = memsx(&["pullin", "cfg.json", "--out", "b", "--jobs", "1"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    let ja = fs::read(dir.path().join("a/pullin.json")).unwrap();
    let jb = fs::read(dir.path().join("b/pullin.json")).unwrap();
    assert_eq!(ja, jb);
    let v: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert!(v["gap"].as_f64().unwrap() <= 0.01);
    assert!(v["meta"]["config_hash"].as_str().unwrap().len() == 64);
}

#[test]
fn config_errors_exit_with_2_and_a_line() {
    let dir = with_config("{\n  \"model\": {\n    \"force\": {\"kind\": \"classical\"},\n    \"voltage\": 3\n  }\n}");
    let out = memsx(&["steady", "cfg.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");

    let out = memsx(&["explode", "cfg.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));

    let dir = with_config(r#"{"geometry": {"limits": {"study": "aspect-ratio", "sequence": [0.1, 0.2]}}}"#);
    let out = memsx(&["limits", "cfg.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_flag_changes_the_hash() {
    let dir = with_config(r#"{"geometry": {"n_x": 15, "n_z1": 9, "n_z2": 5}, "model": {"shape_check": {"fields": 1}}}"#);
    for (seed, out) in [("1", "a"), ("2", "b")] {
        let o = memsx(&["force", "cfg.json", "--seed", seed, "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let head = |p: &str| fs::read_to_string(dir.path().join(p)).unwrap().lines().next().unwrap().to_string();
    assert_ne!(head("a/force.csv"), head("b/force.csv"));
}

#[test]
fn limits_table_has_orders() {
    let dir = with_config(
        r#"{"geometry": {"n_x": 31, "n_z1": 17, "n_z2": 9,
            "initial": {"shape": "modes", "amplitudes": [-0.3]},
            "limits": {"study": "aspect-ratio", "sequence": [0.2, 0.1, 0.05]}}}"#,
    );
    let out = memsx(&["limits", "cfg.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("o/limits.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].split(',').nth(4), Some(""));
    let order: f64 = rows[2].split(',').nth(4).unwrap().parse().unwrap();
    assert!(order > 1.8, "{order}");
}
