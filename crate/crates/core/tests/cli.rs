use std::process::Command;

fn gibq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibq"))
}

#[test]
fn trees_table_exit_zero() {
    let out = gibq().args(["trees", "--arity", "2", "--max-gen", "6"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("j,count,"));
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn missing_config_exits_two_with_schema() {
    let out = gibq().args(["inflate", "--config", "missing.json", "--out", "nowhere"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("n_list | N_list"), "{err}");
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"k":2,"s":-0.75,"n_list":[2],"colour":"red"}"#).unwrap();
    let out = gibq().args(["inflate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inflate_writes_outputs_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"k":2,"s":-0.75,"delta":0.25,"N_list":[256,1024],"J":3,"families":["sobolev"]}"#).unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = gibq().args(["inflate", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (
            std::fs::read(out_dir.join("runs.csv")).unwrap(),
            std::fs::read(out_dir.join("manifest.json")).unwrap(),
        )
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a.0).unwrap().lines().count(), 3);
}

#[test]
fn construct_and_norm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let bump = dir.path().join("bump.json");
    let out = gibq()
        .args(["construct", "--n", "2", "--k", "2", "--s", "-0.75", "--sigma", "-2", "--delta", "0.25", "--out"])
        .arg(&bump)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&bump).unwrap()).unwrap();
    assert_eq!(doc["params"]["big_n"], 256);
    assert_eq!(doc["params"]["sigma"], -2.0);
    let field = dir.path().join("field.json");
    let entries: Vec<_> = doc["bump"]["omega_support"]
        .as_array()
        .unwrap()
        .iter()
        .map(|xi| serde_json::json!({"xi": xi, "re": 1.0, "im": 0.0}))
        .collect();
    std::fs::write(&field, serde_json::json!({"period": 1.0, "entries": entries}).to_string()).unwrap();
    let out = gibq().args(["norms", "--spec", "fl,0,1", "--field"]).arg(&field).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 44.0).abs() < 1e-12);
}

#[test]
fn solve_emits_ledger_for_convergent_bump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("solve.json");
    std::fs::write(&cfg, r#"{"k":2,"horizon":0.01,"bump":{"n":1,"s":-0.75,"delta":0.25,"N":640}}"#).unwrap();
    let out = gibq().args(["solve", "--max-gen", "4", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("j,sup_l1,ratio\n"));
    assert_eq!(text.lines().count(), 6);
    let out = gibq().args(["solve", "--method", "fixed-point", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
}

#[test]
fn thread_override_from_environment() {
    let out = gibq().env("GIBQ_THREADS", "zero").args(["trees", "--arity", "2", "--max-gen", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = gibq().env("GIBQ_THREADS", "2").args(["--threads", "1", "oracle", "--mode", "sandwich", "--side", "2"]).output().unwrap();
    assert!(out.status.success());
}

#[test]
fn version_lists_schemas() {
    let out = gibq().arg("--version").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("report schema"));
}
