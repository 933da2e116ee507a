//! The batch pipeline: a configuration file, a build directory, an
//! augmentation, the verification suites and the summary.

use std::fs;

use bdspace::pipeline::{run_augment, run_build, run_report, run_verify, BuildConfig, Suite};

const CONFIG: &str = r#"{
  "schema": "bdspace/build-config/v1",
  "seed": "three-block",
  "stage_bound": 6,
  "samples": 20,
  "sample_seed": 7,
  "augment": { "family": "schreier:1", "c": "1/16", "theta_cap": 64 }
}"#;

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, CONFIG).unwrap();
    let (cfg, seed) = BuildConfig::load(&cfg_path).unwrap();
    let out = dir.path().join("build");
    let m = run_build(&cfg, &seed, &out).unwrap();
    println!("{} files, bd.json sha256 {}", m.files.len(), m.files["bd.json"]);
    run_augment(&out).unwrap();
    let rep = run_verify(&out, Suite::Constants).unwrap();
    print!("{}", rep.render());
    print!("{}", run_report(&out).unwrap());
}
