use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use shrinkerlab::io::write_shrnk;
use shrinkerlab::{build_mesh, GeneralizedCylinder};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shrinkerlab")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Config and reports from the `# {...}` header line of a CSV artifact.
fn csv_header(text: &str) -> Value {
    let first = text.lines().next().expect("header line");
    serde_json::from_str(first.strip_prefix("# ").expect("comment header")).expect("header JSON")
}

fn write_circle(path: &Path, radius: f64) {
    let mesh = build_mesh(&GeneralizedCylinder::with_radius(1, 1, radius).unwrap(), 4.0, 0.05).unwrap();
    write_shrnk(&mesh, fs::File::create(path).unwrap()).unwrap();
}

#[test]
fn plane_area_is_one() {
    let out = run(&["area", "--shape", "plane", "--n", "2", "--R", "12", "--h", "0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let f = doc["data"]["F"].as_f64().unwrap();
    assert!((f - 1.0).abs() < 1e-3, "{f}");
    assert_eq!(doc["config"]["R"], 12.0);
    assert_eq!(doc["reports"][0]["operation"], "gaussian_area");
}

#[test]
fn growth_rejects_small_r1() {
    let out = run(&["growth", "--shape", "sphere", "--n", "2", "--rmax", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "config");
    assert_eq!(err["pass"], false);
}

#[test]
fn rn_sweep_lists_every_k() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rn.csv");
    let out = run(&["rn-sweep", "--n", "1", "--step", "0.25", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let header = csv_header(&text);
    assert_eq!(header["config"]["command"], "rn-sweep");
    assert_eq!(header["config"]["seed"], 0);
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("1,0,"));
    assert!(rows[1].starts_with("1,1,"));
}

#[test]
fn growth_csv_embeds_config_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("growth.csv");
    let args = ["growth", "--shape", "cylinder", "--n", "2", "--r1", "3", "--rmax", "8", "--out", path.to_str().unwrap()];
    assert_eq!(run(&args).status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let header = csv_header(&text);
    assert_eq!(header["pass"], true);
    assert_eq!(header["config"]["rmax"], 8.0);
    assert_eq!(text.lines().nth(1), Some("r,V,T,regular"));
}

#[test]
fn outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = run(&["catalog", "--shape", "cylinder", "--n", "3", "--k", "2", "--rotate", "--seed", "9", "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        runs.push(fs::read(&path).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn analytic_residual_is_at_machine_precision() {
    for (shape, n, k) in [("plane", "4", "0"), ("sphere", "3", "3"), ("cylinder", "4", "2")] {
        let out = run(&["residual", "--shape", shape, "--n", n, "--k", k, "--seed", "1"]);
        assert_eq!(out.status.code(), Some(0), "{shape}");
        assert!(json(&out)["reports"][0]["residual"].as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn failed_check_exits_one() {
    // a tolerance no discretization can meet
    let out = run(&["area", "--shape", "sphere", "--n", "1", "--h", "0.5", "--R", "4", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["kind"], "check");
    assert_eq!(err["failed"][0]["operation"], "gaussian_area");
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(run(&["area", "--shape", "plane", "--h", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["area", "--shape", "sphere", "--n", "2", "--k", "1"]).status.code(), Some(2));
    assert_eq!(run(&["certify", "--n", "1"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_shrinkerlab"))
        .args(["rn-sweep", "--n", "1"])
        .env("SHRINKERLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_mesh_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.shrnk");
    fs::write(&path, "SHRNK 1 2 2 1 0\n0 0\n1 0\n0 5\n").unwrap();
    let out = run(&["area", "--mesh", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("line 4"), "{}", err["error"]);
}

#[test]
fn certify_fires_on_the_line() {
    let out = run(&["certify", "--shape", "plane", "--n", "1", "--r2", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let value = &json(&out)["reports"][0]["value"];
    assert_eq!(value["fires"], true);
    assert!(value["margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn frankel_catalog_sweep_intersects() {
    let out = run(&["frankel", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["reports"][0]["inputs"]["pairs"], 72);
}

#[test]
fn frankel_disjoint_files_give_firing_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.shrnk");
    let b = dir.path().join("b.shrnk");
    write_circle(&a, 2f64.sqrt());
    write_circle(&b, 1.9);
    let out = run(&[
        "frankel",
        "--n",
        "1",
        "--mesh",
        a.to_str().unwrap(),
        "--other",
        b.to_str().unwrap(),
        "--R",
        "4",
        "--core-radius",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out);
    assert_eq!(doc["data"]["verdict"], "DisjointEvidence");
    assert_eq!(doc["data"]["certificate"]["fires"], true);
    assert!(doc["data"]["F_gamma"].as_f64().is_some());
}

#[test]
fn cutoff_energy_on_the_plane() {
    let out = run(&["cutoff", "--n", "3", "--R", "4", "--rho", "0.01"]);
    assert_eq!(out.status.code(), Some(0));
    let value = &json(&out)["reports"][0]["value"];
    // ∫_ρ^{2ρ} ρ^{−2} 4πr² dr = 28πρ/3 for a point in R³, up to the weight
    let d = value["dirichlet"].as_f64().unwrap();
    assert!((d - 28.0 * std::f64::consts::PI * 0.01 / 3.0).abs() < 0.01 * d, "{d}");
}
