use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kompaneets(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kompaneets"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_writes_both_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"preset":"box","a":0.5,"b":1.5,"height":1,"cells":80,"t_end":0.5,"snapshot_every":0.25}"#,
    );
    let out = kompaneets(&["simulate", "--config", &cfg, "--set", "output_dir=run"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let series = fs::read_to_string(dir.path().join("run/series.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,N,condensate_mass,tv,min_slope,alpha_fit,l1_to_fit,lower_bound"
    );
    assert_eq!(lines.count(), 3);
    let snaps = fs::read_to_string(dir.path().join("run/snapshots.csv")).unwrap();
    assert_eq!(snaps.lines().next().unwrap(), "t,x,n");
    assert_eq!(snaps.lines().count(), 1 + 3 * 80);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"preset":"bump","center":1,"width":0.5,"height":2,"cells":64,"t_end":0.3}"#,
    );
    for run in ["a", "b"] {
        let out = kompaneets(&["simulate", "--config", &cfg, "--out", run], dir.path());
        assert!(out.status.success());
    }
    for file in ["snapshots.csv", "series.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(file)).unwrap(),
            fs::read(dir.path().join("b").join(file)).unwrap()
        );
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"preset":"box","a":0.5,"b":1.5,"height":1,"t_end":-1}"#);
    let out = kompaneets(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_end"));

    let cfg = write_config(dir.path(), r#"{"preset":"sawtooth"}"#);
    let out = kompaneets(&["simulate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bose_einstein"));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = kompaneets(&["verify", "--suite", "everything"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("supersolution") && err.contains("entropy"), "{err}");
}

#[test]
fn sweep_writes_one_row_per_viscosity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"preset":"box","a":0.5,"b":1.5,"height":1,"cells":100,"t_end":0.5}"#,
    );
    let out = kompaneets(
        &["sweep-viscosity", "--config", &cfg, "--eps", "0.02,0.01", "--jobs", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<Vec<f64>> = sweep
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], 0.02);
    assert!(rows[1][1] < rows[0][1]);
}
