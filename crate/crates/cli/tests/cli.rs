use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn locev(args: &[&str], config: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_locev"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const MASTER: &str = r#"{"schema_version": 1, "kind": "master",
    "params": {"lattice": {"sites": 4, "particles": 2}, "rate": 0.1, "total_time": 1.0, "dt": 0.01}}"#;

const TRAJ: &str = r#"{"schema_version": 1, "kind": "trajectories", "seed": 3,
    "params": {"lattice": {"sites": 3, "particles": 2}, "rate": 0.3, "total_time": 1.0,
               "dt": 0.01, "trajectories": 64}}"#;

#[test]
fn master_run_writes_series_and_record() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "m.json", MASTER);
    let out = dir.path().join("m.csv");
    let o = locev(&["master"], Some(&cfg), Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(header(&out), "time,observable,re,im,stderr");
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.run.json")).unwrap()).unwrap();
    assert_eq!(record["kind"], "master");
    assert!(!record["invariants"].as_array().unwrap().is_empty());
    assert_eq!(record["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn oversized_basis_is_a_capacity_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "big.json", &MASTER.replace("\"sites\": 4, \"particles\": 2", "\"sites\": 7, \"particles\": 7"));
    let o = locev(&["master"], Some(&cfg), Some(&dir.path().join("big.csv")));
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_named() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "bad.json", &MASTER.replace("\"rate\"", "\"ratee\""));
    let o = locev(&["master"], Some(&cfg), None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("params.ratee"), "{}", stderr(&o));
}

#[test]
fn subcommand_must_match_kind() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "m.json", MASTER);
    let o = locev(&["spdm"], Some(&cfg), None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oversized_step_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "dt.json", &MASTER.replace("\"dt\": 0.01", "\"dt\": 5.0").replace("1.0,", "10.0,"));
    let o = locev(&["master"], Some(&cfg), Some(&dir.path().join("dt.csv")));
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn trajectories_are_deterministic_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "t.json", TRAJ);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(locev(&["trajectories"], Some(&cfg), Some(&a)).status.code(), Some(0));
    assert_eq!(locev(&["--threads", "1", "trajectories"], Some(&cfg), Some(&b)).status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c = dir.path().join("c.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_locev"))
        .args(["trajectories", "--seed", "4", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&c)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn other_kinds_write_their_headers() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (
            "spdm",
            r#"{"schema_version": 1, "kind": "spdm", "params": {"window": 21, "curvature": 1.0, "total_time": 0.2}}"#,
            "time,site,density",
        ),
        (
            "rates",
            r#"{"schema_version": 1, "kind": "rates-sweep", "params": {"depths": [2, 5, 10]}}"#,
            "V,n_high,gamma_prime",
        ),
        (
            "collapse",
            r#"{"schema_version": 1, "kind": "collapse", "params": {"sigma0": 1.0, "l": 1.0, "points": 128}}"#,
            "x,x_prime,re,im",
        ),
        (
            "sweep",
            r#"{"schema_version": 1, "kind": "damping-sweep",
                "params": {"sites": 4, "particles": 1, "rates": [0.05, 0.1], "total_time": 2.0}}"#,
            "r,fitted_rate,predicted_rate",
        ),
    ];
    for (cmd, text, expected) in cases {
        let cfg = write(&dir, &format!("{cmd}.json"), text);
        let out = dir.path().join(format!("{cmd}.csv"));
        let o = locev(&[cmd], Some(&cfg), Some(&out));
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        assert_eq!(header(&out), expected, "{cmd}");
    }
}

#[test]
fn closed_form_demos_exit_cleanly() {
    for name in ["eq12", "fbar", "flat-noise-gamma"] {
        let o = locev(&["demo", name], None, None);
        assert_eq!(o.status.code(), Some(0), "{name}");
        assert!(!o.stdout.is_empty());
    }
}
