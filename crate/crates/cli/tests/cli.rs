use std::fs;
use std::process::Command;

fn spinstar() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_spinstar"));
    cmd.env("SPINSTAR_THREADS", "1");
    cmd
}

#[test]
fn lie_dim_reports_equal_coupling_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let status = spinstar()
        .args(["lie-dim", "--n", "2", "--scheme", "equal", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(status.status.success());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("lie_dim.json")).unwrap()).unwrap();
    assert_eq!(report["dim"], 38);
    assert_eq!(report["formula_dim"], 38);
    assert_eq!(report["match"], true);
}

#[test]
fn oversized_system_is_refused() {
    let out = spinstar().args(["lie-dim", "--n", "9", "--scheme", "different"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn small_sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.json");
    fs::write(
        &config,
        r#"{"n_bath":[0,1],"tau":{"start":0.5,"stop":1.0,"step":0.5},"restarts":2,"seed":4}"#,
    )
    .unwrap();
    let out = spinstar().arg("sweep").arg("--config").arg(&config).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n_bath,tau,restarts,best_fidelity,mean_fidelity,fidelity_kind,scheme,seed,wall_ms"
    );
    assert_eq!(lines.count(), 4);
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn bad_configuration_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    fs::write(&config, r#"{"threshold": 2.0}"#).unwrap();
    let out = spinstar().arg("sweep").arg("--config").arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = spinstar().arg("sweep").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
