//! The `bdspace` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bdspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdspace")).args(args).env("BDSPACE_WORKERS", "2").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p.display().to_string()
}

const THREE_BLOCK: &str = r#"{
  "schema": "bdspace/build-config/v1",
  "seed": "three-block",
  "stage_bound": 6,
  "samples": 20,
  "augment": { "family": "schreier:1", "c": "1/16", "theta_cap": 32 }
}"#;

#[test]
fn norm_query() {
    let o = bdspace(&["norm", "--c", "1/2", "3:1,4:1,5:1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "3/2");
    let o = bdspace(&["norm", "--c", "1/2", ""]);
    assert_eq!(stdout(&o).trim(), "0");
}

#[test]
fn decompose_query() {
    let o = bdspace(&["decompose", "--c", "1/2", "1:1,2:1,3:1"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "{1},{2},{3}");
    let o = bdspace(&["decompose", "--c", "1/2", "--norm", "linf", "1:1/4,2:1/4,3:1"]);
    assert!(o.status.success());
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(bdspace(&["norm", "--c", "3/2", "1:1"]).status.code(), Some(2));
    assert_eq!(bdspace(&["norm", "--c", "1/2", "1:x"]).status.code(), Some(2));
}

#[test]
fn build_verify_augment_dump() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), THREE_BLOCK);
    let out = dir.path().join("out");
    let out_s = out.display().to_string();
    let o = bdspace(&["build", "--config", &cfg, "--out", &out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("[6, 12, 32, 12, 64, 256]"));

    let o = bdspace(&["verify", &out_s, "--suite", "constants"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("verdict: PASS"));
    assert_eq!(bdspace(&["verify", &out_s, "--suite", "prop-1.4"]).status.code(), Some(0));

    let o = bdspace(&["augment", &out_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("augment/manifest.json").exists());

    let o = bdspace(&["verify", &out_s, "--suite", "augment", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(rep["checks"].as_array().unwrap().len() > 5);

    let o = bdspace(&["dump", &out_s, "--stage", "2"]);
    assert!(o.status.success());
    let stage: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stage["schema"], "bdspace/stage/v1");

    let o = bdspace(&["report", &out_s]);
    assert!(stdout(&o).contains("382 elements"));

    // Determinism: a second build is byte-identical.
    let out2 = dir.path().join("out2");
    assert!(bdspace(&["build", "--config", &cfg, "--out", &out2.display().to_string()]).status.success());
    for f in ["bd.json", "coding.json", "norming-set.json", "stages/stage-006.json", "manifest.json"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(out2.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn tampered_cstar_fails_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), THREE_BLOCK.replace("\"stage_bound\": 6", "\"stage_bound\": 3").as_str());
    let out = dir.path().join("out");
    let out_s = out.display().to_string();
    assert!(bdspace(&["build", "--config", &cfg, "--out", &out_s]).status.success());

    let path = out.join("bd.json");
    let mut bd: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    // Entries are stored as [index, numerator, denominator].
    let table = bd["cstar"].as_array_mut().unwrap();
    let victim = table.iter_mut().rev().find(|c| !c["entries"].as_array().unwrap().is_empty()).unwrap();
    victim["entries"][0][1] = serde_json::json!(7);
    fs::write(&path, serde_json::to_string(&bd).unwrap()).unwrap();

    let o = bdspace(&["verify", &out_s, "--suite", "schema", "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let rep: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let fail = rep["checks"].as_array().unwrap().iter().find(|c| c["name"] == "bd.cstar-table").unwrap();
    assert_eq!(fail["verdict"], "FAIL");
    let w = &fail["witness"][0];
    assert_ne!(w["stored"], w["recomputed"]);
}

#[test]
fn parameter_violation_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
  "schema": "bdspace/build-config/v1",
  "seed": "three-block",
  "eps_rule": { "first": "1/256", "ratio": "1/2" },
  "stage_bound": 4
}"#,
    );
    let o = bdspace(&["build", "--config", &cfg, "--out", &dir.path().join("o").display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("Σ ε_i"), "{err}");

    let cfg = write_config(dir.path(), "{\n  \"schema\": \"bdspace/build-config/v1\",\n  \"stage_bound\": 4,,\n}");
    let o = bdspace(&["build", "--config", &cfg, "--out", &dir.path().join("o").display().to_string()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}
