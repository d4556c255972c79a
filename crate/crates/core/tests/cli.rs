use std::process::{Command, Output};

fn beamfd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beamfd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("an error line");
    serde_json::from_str(line).expect("machine-readable error")
}

#[test]
fn study_preset_prints_table_shaped_csv() {
    let o = beamfd(&["study", "--preset", "example1-temporal"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "cell,level,N,E2,rate");
    assert_eq!(lines.len(), 1 + 3 * 5);
    assert!(lines[1].starts_with("gamma=0,0,16,"));
    assert!(lines[1].ends_with(",*"));
}

#[test]
fn study_writes_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = beamfd(&["study", "--preset", "example2-spatial", "--out-dir", out, "--set", "study.levels=2"]);
    assert!(o.status.success(), "{o:?}");
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("cell,level,J,F2,rate\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 2);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["metadata"]["config"]["study"]["levels"], 2);
}

#[test]
fn solve_with_zero_data_writes_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let o = beamfd(&["solve", "--preset", "zero", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    let sol = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    let mut lines = sol.lines();
    assert_eq!(lines.next(), Some("x,U"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r.split(',').nth(1) == Some("0")));
    let ts = std::fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert_eq!(
        ts.lines().next(),
        Some("n,t,vel_norm,curv_norm,damping,fp_iters,kinetic,dissipated,elastic,total")
    );
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let text = r#"{
        "kernel": { "family": "non-oscillatory", "sigma": 2.0, "alpha": 0.5 },
        "damping": { "kind": "sqrt-affine", "a": 1.0, "b": 1.0 },
        "initial": { "u0": { "kind": "polynomial", "p": 2, "q": 2 },
                     "u1": { "kind": "zero" } },
        "grid": { "intervals": 8 },
        "time": { "horizon": 1.0, "steps": 16 }
    }"#;
    std::fs::write(&path, text).unwrap();
    let p = path.to_str().unwrap();
    let o = beamfd(&["solve", "--config", p]);
    assert!(o.status.success(), "{o:?}");
    assert_eq!(stdout(&o).lines().count(), 1 + 7);
    let o = beamfd(&["solve", "--config", p, "--set", "grid.intervals=16"]);
    assert_eq!(stdout(&o).lines().count(), 1 + 15);
}

#[test]
fn weights_dump() {
    let o = beamfd(&["weights", "--preset", "example2", "--set", "time.steps=8"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("k,t,omega,K"));
    assert_eq!(text.lines().count(), 1 + 8);
}

#[test]
fn stability_passes_on_long_preset() {
    let o = beamfd(&["stability", "--preset", "example2-long"]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["tail_ok"], true);
}

#[test]
fn unknown_preset_is_a_config_error() {
    let o = beamfd(&["solve", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["category"], "config");
}

#[test]
fn invalid_parameters_are_config_errors() {
    let o = beamfd(&["solve", "--preset", "example1", "--set", "kernel.sigma=0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert!(e["error"]["message"].as_str().unwrap().contains("σ > 1"));
    let o = beamfd(&["solve", "--preset", "example1", "--set", "grid.spacing=3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = beamfd(&["solve"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_is_a_numerical_error() {
    let o = beamfd(&["solve", "--preset", "example1", "--set", "solver.fp_max_iters=1"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["error"]["category"], "numerical");
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = beamfd(&["solve", "--config", "/nonexistent/beamfd.json"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_json(&o)["error"]["category"], "io");
}
