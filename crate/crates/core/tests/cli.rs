use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ellipsoid-entropy"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn count_csv() {
    let o = run(&["count", "--k", "2", "--r", "1,2,3,5,10"]);
    assert!(o.status.success(), "{o:?}");
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema_version=1"));
    assert!(lines.next().unwrap().starts_with("k,R,"));
    let taus: Vec<&str> = lines.map(|l| l.split(',').nth(5).unwrap()).collect();
    assert_eq!(taus, ["5", "13", "29", "81", "317"]);
}

#[test]
fn sweep_json_and_file_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.json");
    let o = run(&[
        "sweep",
        "--k",
        "2..4",
        "--r",
        "20",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["summary"]["violations"], 0);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"k_list":[3],"R_list":[2],"profile":{"kind":"uniform","eps":1.0},"mode":"both"}"#,
    )
    .unwrap();
    let o = run(&["bound", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    // Two modes, one row each, plus the schema and header lines.
    assert_eq!(stdout(&o).lines().count(), 4);
    let o = run(&[
        "bound",
        "--config",
        cfg.to_str().unwrap(),
        "--mode",
        "certified",
        "--eps",
        "0.5",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o)
        .lines()
        .nth(2)
        .unwrap()
        .starts_with("3,2.0,0.5,1.5,certified_envelope,"));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"k_list":[0]}"#).unwrap();
    assert_eq!(
        run(&["count", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["count", "--config", "/nonexistent/cfg.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["count", "--k", "2..x"]).status.code(), Some(2));
    assert_eq!(run(&["count", "--r", "-3"]).status.code(), Some(2));
}

#[test]
fn verify_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("weak.json");
    std::fs::write(
        &cfg,
        r#"{"k_list":[2],"R_list":[4],"ledger":{"sigma_c":0.01},"verify":{"codec_samples":10}}"#,
    )
    .unwrap();
    let o = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{o:?}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("certified_bound"));
}

#[test]
fn verify_passes_by_default() {
    let o = run(&["verify", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
}

#[test]
fn quantize_signal_file() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("f.json");
    std::fs::write(&sig, "[0.75, -1.25, 2.0]").unwrap();
    let o = run(&[
        "quantize",
        "--signal",
        sig.to_str().unwrap(),
        "--eps",
        "0.5",
    ]);
    assert!(o.status.success(), "{o:?}");
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["codes"], serde_json::json!([1, -2, 4]));
}

#[test]
fn thread_count_must_be_positive() {
    let o = bin()
        .args(["count", "--k", "2", "--r", "2"])
        .env("ELLIPSOID_ENTROPY_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin()
        .args(["count", "--k", "2", "--r", "2"])
        .env("ELLIPSOID_ENTROPY_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
}
