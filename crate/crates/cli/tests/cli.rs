use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn elk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elk"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn elk")
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{}.json", name))
}

fn load(name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(scenario(name)).unwrap()).unwrap()
}

fn write(dir: &Path, v: &Value) -> PathBuf {
    let p = dir.join("scenario.json");
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run_into(s: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", s.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    elk(&args)
}

fn snapshots(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with("snapshot_"))
        .collect();
    v.sort();
    v
}

#[test]
fn diffusion_run_writes_snapshots_and_reports() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("run");
    let o = run_into(&scenario("diffusion"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: Value = serde_json::from_str(&fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "completed");
    let listed = meta["snapshots"].as_array().unwrap().len();
    assert!(listed >= 2);
    assert_eq!(snapshots(&out).len(), listed);
    assert!(out.join("audit.jsonl").is_file());

    let r = elk(&["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.contains("oracle heat_kernel"), "{}", text);
    assert!(text.contains("0 violations"), "{}", text);
}

#[test]
fn forged_bulk_viscosity_trips_strict_audit() {
    let d = tempfile::tempdir().unwrap();
    let mut v = load("shear_flow");
    v["name"] = json!("forged");
    v["material"]["bulk_viscosity"] = json!(-1.0);
    v["audit"]["every"] = json!(1);
    let s = write(d.path(), &v);

    let val = elk(&["validate", s.to_str().unwrap()]);
    assert_eq!(val.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&val.stdout).contains("material"));

    let o = run_into(&s, &d.path().join("strict"), &["--strict-audit"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: Value = serde_json::from_str(&fs::read_to_string(d.path().join("strict/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "audit_violation");

    let lax = run_into(&s, &d.path().join("lax"), &[]);
    assert_eq!(lax.status.code(), Some(0));
}

#[test]
fn unresolvable_step_is_a_solver_failure() {
    let d = tempfile::tempdir().unwrap();
    let mut v = load("migration");
    v["numerics"] = json!({
        "dt": 1e3,
        "end_time": 1e4,
        "dt_floor": 1e2,
        "gummel_tol": 1e-15,
        "gummel_max_iter": 1
    });
    let s = write(d.path(), &v);
    let o = run_into(&s, &d.path().join("run"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: Value = serde_json::from_str(&fs::read_to_string(d.path().join("run/metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "solver_failure");
}

#[test]
fn relativistic_scenario_is_refused_unless_forced() {
    let d = tempfile::tempdir().unwrap();
    let mut v = load("diffusion");
    v["numerics"]["end_time"] = json!(0.002);
    v["scaling"] = json!({"e0": 1.0, "b0": 1.0, "length": 1.0, "time": 1e-9, "alpha": 1.0});
    let s = write(d.path(), &v);

    let c = elk(&["classify", s.to_str().unwrap()]);
    assert_eq!(c.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&c.stdout).starts_with("Relativistic"));

    let o = run_into(&s, &d.path().join("refused"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--force"));
    assert!(snapshots(&d.path().join("refused")).is_empty());

    let f = run_into(&s, &d.path().join("forced"), &["--force"]);
    assert_eq!(f.status.code(), Some(0), "{}", String::from_utf8_lossy(&f.stderr));
}

#[test]
fn invalid_inputs_exit_one() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(elk(&["report", d.path().to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(elk(&["validate", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(elk(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(elk(&["--version"]).status.code(), Some(0));

    let mut v = load("reaction");
    v["reactions"][0]["stoichiometry"]["B"] = json!(2);
    let s = write(d.path(), &v);
    let o = elk(&["validate", s.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass-criterion"));
}

#[test]
fn classify_reports_regime() {
    let o = elk(&["classify", scenario("migration").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("Electrostatic"), "{}", text);
    assert!(text.contains("delta_v/delta_w"));

    let o = elk(&["classify", scenario("boltzmann").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no scaling section"));
}

#[test]
fn runs_are_bit_reproducible() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    for out in [&a, &b] {
        let o = run_into(&scenario("charged_reaction"), out, &[]);
        assert_eq!(o.status.code(), Some(0));
    }
    let (sa, sb) = (snapshots(&a), snapshots(&b));
    assert!(!sa.is_empty());
    assert_eq!(sa.len(), sb.len());
    for (x, y) in sa.iter().zip(&sb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
    assert_eq!(fs::read(a.join("audit.jsonl")).unwrap(), fs::read(b.join("audit.jsonl")).unwrap());
}
