use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drillbench"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn demo_bundle_is_complete_and_reproducible() {
    let cfg = configs().join("demo-73.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let oa = run(&["run", "--in", cfg.to_str().unwrap(), "--out", a.path().to_str().unwrap()]);
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    let ob = run(&["run", "--in", cfg.to_str().unwrap(), "--out", b.path().to_str().unwrap(), "--workers", "1"]);
    assert_eq!(code(&ob), 0);
    let fa = read_dir_sorted(a.path());
    let fb = read_dir_sorted(b.path());
    assert_eq!(fa, fb);
    let bundle: Value = serde_json::from_slice(&fa.iter().find(|(n, _)| n == "bundle.json").unwrap().1).unwrap();
    let reports = bundle["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 7);
    assert!(reports.iter().all(|r| r["verdict"] == "pass" && r["details"]["config_hash"] == bundle["config_hash"]));
    assert!(fa.iter().any(|(n, _)| n == "space.dot"));
}

#[test]
fn verdicts_map_to_exit_codes() {
    let pass = run(&["measure-delta", "--space", "tree:3", "--radius", "4"]);
    assert_eq!(code(&pass), 0);
    assert_eq!(stdout_json(&pass)["reports"][0]["details"]["delta_twice"], 0);

    let inconclusive = run(&["cusp", "--profile", "exact", "--radius", "6"]);
    assert_eq!(code(&inconclusive), 2);

    let text = std::fs::read_to_string(configs().join("two-tube.json")).unwrap();
    let mut cfg: Value = serde_json::from_str(&text).unwrap();
    cfg["drill"]["tubes"][1] = cfg["drill"]["tubes"][0].clone();
    cfg["drill"]["tubes"][1]["slot"] = 1.into();
    cfg["drill"]["chi"] = 3.into();
    cfg["stages"] = serde_json::json!(["audit"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("overlap.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    let fail = run(&["run", "--in", path.to_str().unwrap()]);
    assert_eq!(code(&fail), 1, "{}", String::from_utf8_lossy(&fail.stdout));
    assert_eq!(stdout_json(&fail)["verdict"], "fail");
}

#[test]
fn invalid_input_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name":"x","seed":0,"space":{"kind":"cycle:5","radus":3},"stages":["generate"]}"#).unwrap();
    let o = run(&["run", "--in", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("space"), "{}", String::from_utf8_lossy(&o.stderr));

    let o = run(&["gen-space", "--space", "nonsense:3"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("space.kind"));

    let o = run(&["audit", "--kind", "everything"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn exact_constants_report_the_toy_cascade() {
    let o = run(&["constants", "--profile", "exact"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["kind"], "constants");
    assert!(v["details"]["identities"].as_object().unwrap().values().all(|b| b == true));
    let s = v.to_string();
    for needle in ["\"150000\"", "\"600002\"", "\"1200006\"", "\"720003600000\""] {
        assert!(s.contains(needle), "{needle} missing from {s}");
    }
}

#[test]
fn drill_with_no_steps_returns_the_base() {
    let cfg = configs().join("two-tube.json");
    let o = run(&["drill", "--in", cfg.to_str().unwrap(), "--steps", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["audit", "--in", cfg.to_str().unwrap(), "--kind", "separation"]);
    assert_eq!(code(&o), 0);
}
