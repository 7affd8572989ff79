use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn pcflab(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcflab")).env("PCFLAB_OUTPUT", root).args(args).output().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("pcflab-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

#[test]
fn cone_config_reports_area() {
    let root = scratch("cone");
    let out = pcflab(&root, &["cone", configs().join("exceptional_curve.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("tau* = 2.5"));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(root.join("exceptional_curve/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "pass");
}

#[test]
fn validation_error_exits_2() {
    let root = scratch("invalid");
    std::fs::create_dir_all(&root).unwrap();
    let bad = root.join("bad.toml");
    std::fs::write(&bad, "experiment = \"cone\"\n[tolerance]\ngauge = 0.0\n").unwrap();
    let out = pcflab(&root, &["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tolerance.gauge"));
    let out = pcflab(&root, &["cone", configs().join("sol0.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = pcflab(&root, &["describe", "not-a-group"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flipped_sign_run_exits_4() {
    let root = scratch("flipped");
    std::fs::create_dir_all(&root).unwrap();
    let cfg = root.join("flipped.toml");
    std::fs::write(&cfg, "experiment = \"fixedpoint_checks\"\n[geometry]\nflip_dc_sign = true\n").unwrap();
    let out = pcflab(&root, &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn singular_run_exits_3_with_summary() {
    let root = scratch("singular");
    std::fs::create_dir_all(&root).unwrap();
    let cfg = root.join("hopf_flipped.toml");
    std::fs::write(&cfg, "experiment = \"homogeneous\"\n[geometry]\nmodel = \"Hopf\"\nt_end = 50.0\nflip_dc_sign = true\n").unwrap();
    let out = pcflab(&root, &["run", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(root.join("hopf_flipped/summary.json").exists());
}

#[test]
fn describe_prints_json() {
    let out = pcflab(&scratch("describe"), &["describe", "Hopf"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["model"], "Hopf");
}

#[test]
fn verify_subset_writes_matrix() {
    let root = scratch("verify");
    let out = pcflab(&root, &["verify", "--only", "3,9"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(root.join("verify.json")).unwrap()).unwrap();
    assert_eq!(m.as_array().unwrap().len(), 2);
    let out = pcflab(&root, &["verify", "--only", "3", "--flip-dc-sign"]);
    assert_eq!(out.status.code(), Some(4));
}
