use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xikernel"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn run_shipped(name: &str, extra: &[&str]) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    let out = run(&configs().join(name), dir.path(), extra);
    (dir, out)
}

fn write_config(dir: &TempDir, body: &str) -> PathBuf {
    let p = dir.path().join("config.json");
    fs::write(&p, body).unwrap();
    p
}

fn read_json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Tweak a shipped config and return the edited JSON text.
fn edited(name: &str, f: impl FnOnce(&mut Value)) -> String {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(configs().join(name)).unwrap()).unwrap();
    f(&mut v);
    v.to_string()
}

#[test]
fn kernel_at_origin_is_one_over_pi() {
    let (dir, o) = run_shipped("c2_classical_kernel_z0.json", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let k = read_json(dir.path(), "kernel.json")["K"].as_f64().unwrap();
    assert!((k - std::f64::consts::FRAC_1_PI).abs() < 1e-9, "{k}");
    assert!(String::from_utf8_lossy(&o.stdout).contains("kernel: PASS"));
}

#[test]
fn empty_model_reports_zero_with_warning() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        r#"{"command":"kernel","domain":{"radii":[1.0]},
            "weight":{"zArity":1,"terms":[{"variant":"logMonomial","c":[50.0]}]},
            "functional":{"arity":1,"terms":[{"alpha":[0],"re":1.0}]},
            "degree":5,"z":[[0.2,0.0]]}"#,
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("empty"));
    let v = read_json(&out, "kernel.json");
    assert_eq!(v["K"].as_f64(), Some(0.0));
    assert!(v["logK"].is_null());
}

#[test]
fn unknown_key_is_rejected_without_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, &edited("c2_classical_kernel_z0.json", |v| v["bogus"] = 1.into()));
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
    assert!(!out.exists());
}

#[test]
fn unknown_command_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, r#"{"command":"frobnicate"}"#);
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn missing_config_file_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = run(&dir.path().join("nope.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn circle_larger_than_base_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &edited("c4_divisor_scan.json", |v| v["circles"]["radius"] = 1.5.into()),
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("circle radius"));
    assert!(!out.exists());
}

#[test]
fn point_outside_domain_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &edited("c2_classical_kernel_z0.json", |v| {
            v["z"] = serde_json::json!([[1.2, 0.0]])
        }),
    );
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn control_scan_exits_zero_and_reports_not_holomorphic() {
    let (dir, o) = run_shipped("control_scan.json", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(dir.path(), "psh_reports.json");
    assert_eq!(v["holomorphic"], Value::Bool(false));
    assert!(dir.path().join("scan.csv").exists());
}

#[test]
fn divisor_scan_passes_with_minus_infinity_as_null() {
    let (dir, o) = run_shipped("c4_divisor_scan.json", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(dir.path(), "psh_reports.json");
    assert_eq!(v["failures"].as_u64(), Some(0));
    assert!(v["reports"].as_array().unwrap().iter().any(|r| r["kind"] == "joint"));
    let csv = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 81);
    assert!(csv
        .lines()
        .any(|l| l.starts_with("0.000000000000e0,0.000000000000e0,-inf")));
    let at_origin = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["kind"] == "base" && r["centerValue"].is_null());
    assert!(at_origin.is_some());
}

#[test]
fn annihilator_for_the_pinched_ideal_has_two_rows() {
    let (dir, o) = run_shipped("c5_annihilate_z1_minus_wz2.json", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(dir.path(), "annihilator.json");
    let a = &v["annihilator"];
    assert_eq!(a["rank"].as_u64(), Some(1));
    assert_eq!(a["b"]["entries"].as_array().unwrap().len(), 2);
    assert!(v["identityResidual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn lambda_locus_is_the_origin() {
    let (dir, o) = run_shipped("c6_lambda_divisor.json", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = read_json(dir.path(), "lambda.json");
    assert_eq!(v["lambdaGrid"], serde_json::json!([[[0.0, 0.0]]]));
    assert!(v["disagreements"].as_array().unwrap().is_empty());
    assert_eq!(read_json(dir.path(), "krull.json")["stabilizedAt"].as_u64(), Some(2));
    assert!(dir.path().join("lambda.csv").exists());
}

#[test]
fn w_independent_extension_has_unit_ratio() {
    let (dir, o) = run_shipped("c7_extend_w_independent.json", &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = read_json(dir.path(), "extension.json")["report"]["ratio"]
        .as_f64()
        .unwrap();
    assert!((r - 1.0).abs() < 1e-10, "{r}");
}

#[test]
fn ratio_over_bound_exits_one_but_writes_output() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        &edited("c7_extend_quadratic.json", |v| v["ratioBound"] = 0.5.into()),
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("extend: FAIL"));
    assert!(out.join("extension.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, _) = run_shipped("c5_annihilate_z_minus_w.json", &[]);
    let (b, _) = run_shipped("c5_annihilate_z_minus_w.json", &["--threads", "1"]);
    let read = |d: &TempDir| fs::read(d.path().join("annihilator.json")).unwrap();
    assert_eq!(read(&a), read(&b));

    let (a, _) = run_shipped("c4_family_scan.json", &[]);
    let (b, _) = run_shipped("c4_family_scan.json", &["--threads", "2"]);
    for f in ["scan.csv", "psh_reports.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn seed_flag_overrides_config_seed() {
    let (a, o) = run_shipped("c5_annihilate_z1.json", &["--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let (b, _) = run_shipped("c5_annihilate_z1.json", &[]);
    let read = |d: &TempDir| fs::read(d.path().join("annihilator.json")).unwrap();
    // The config seed is 7, so passing 7 explicitly changes nothing.
    assert_eq!(read(&a), read(&b));
    let (c, o) = run_shipped("c5_annihilate_z1.json", &["--seed", "12345"]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_json(c.path(), "annihilator.json");
    assert_eq!(v["annihilator"]["rank"].as_u64(), Some(1));
}
