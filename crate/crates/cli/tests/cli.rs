use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sasaki-deform"))
        .args(args)
        .env("SASAKI_DEFORM_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_writes_a_loadable_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = run(&["gen", "--builtin", "clifford-torus", "--res", "8x6", "-o", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&o);
    assert_eq!(r["vertices"], 48);
    assert_eq!(r["top_simplices"], 96);
    let (m, _) = sasaki_deform::mesh::io::load(&out).unwrap();
    assert_eq!(m.betti_numbers(), vec![1, 2, 1]);
}

#[test]
fn unknown_builtin_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gen", "--builtin", "sphere", "--res", "8", "-o", path(&dir.path().join("x.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(json(&o)["error"]["message"].is_string());
}

#[test]
fn check_passes_on_builtins() {
    let o = run(&["check", "--builtin", "clifford-circle", "--res", "128"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&o);
    assert_eq!(r["passed"], true);
    assert_eq!(r["theta_special"], true);
    let o = run(&["check", "--builtin", "clifford-torus", "--res", "16", "--refine", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&o);
    assert!(r["refinement"]["min_order"].as_f64().unwrap() >= 1.8);
}

#[test]
fn check_at_a_fixed_non_special_phase_fails() {
    // the Clifford circle is special at θ = π/2, not at θ = 0
    let o = run(&["check", "--builtin", "clifford-circle", "--res", "128", "--theta", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(json(&o)["passed"], false);
}

#[test]
fn check_reads_mesh_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    assert_eq!(run(&["gen", "--builtin", "clifford-circle", "--res", "64", "-o", path(&out)]).status.code(), Some(0));
    let o = run(&["check", "--mesh", path(&out), "--theta", "auto"]);
    assert_eq!(o.status.code(), Some(0));
    let missing = run(&["check", "--mesh", path(&dir.path().join("none.json"))]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(json(&missing)["command"], "check");
    fs::write(dir.path().join("bad.json"), "{\"dim\": 1}").unwrap();
    let bad = run(&["check", "--mesh", path(&dir.path().join("bad.json"))]);
    assert_ne!(bad.status.code(), Some(0));
    assert!(json(&bad)["error"]["kind"].is_string());
}

#[test]
fn identity_is_deterministic() {
    let args = ["identity", "--n", "2", "--kappa", "3", "--samples", "30", "--seed", "4"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["passed"], true);
    let o = run(&["identity", "--n", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identity_writes_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("id.json");
    let o = run(&["identity", "--n", "1", "--samples", "10", "-o", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["command"], "identity");
}

#[test]
fn moduli_on_the_torus() {
    let o = run(&["moduli", "--builtin", "clifford-torus", "--res", "64", "--kind", "special-legendrian", "--kappa", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&o);
    assert_eq!(r["kernel_dim"], 6);
    assert_eq!(r["match"], true);
}

#[test]
fn moduli_rejects_an_unknown_kind() {
    let o = run(&["moduli", "--builtin", "clifford-circle", "--res", "16", "--kind", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flow_outputs_are_reproducible() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let o = run(&[
            "flow", "--builtin", "clifford-torus", "--res", "12", "--direction", "harmonic:1", "--steps", "3", "-o",
            path(d.path()),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    for name in ["residuals.csv", "mesh_0000.json", "mesh_0003.json"] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert!(a == b, "{name} differs between runs");
    }
    // the reports differ only in the output directory they name
    let report = |d: &tempfile::TempDir| {
        let mut v: Value = serde_json::from_str(&fs::read_to_string(d.path().join("report.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("output");
        v
    };
    assert_eq!(report(&dirs[0]), report(&dirs[1]));
    let csv = fs::read_to_string(dirs[0].path().join("residuals.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn flow_rejects_bad_directions() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["flow", "--builtin", "clifford-torus", "--res", "8", "--direction", "sideways", "-o", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["flow", "--builtin", "clifford-torus", "--res", "8", "--steps", "0", "-o", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}
