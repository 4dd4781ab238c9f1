use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pmspace::corpus;
use pmspace::mesh::{load_mesh, planarity_report, save_mesh};
use pmspace::Mesh;

fn pmspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmspace"))
        .args(args)
        .output()
        .expect("spawn pmspace")
}

fn write_mesh(dir: &Path, name: &str, mesh: &Mesh) -> PathBuf {
    let p = dir.join(name);
    save_mesh(mesh, &p).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_reports_cube_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write_mesh(dir.path(), "cube.obj", &corpus::cube());
    let out = pmspace(&["analyze", s(&cube), "--cases", "affine"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ndof"], 12);
    assert_eq!(v["counts"]["n_v"], 8);
    assert_eq!(v["counts"]["n_f"], 6);
    assert!(v["min_ndof_bound"].is_object());
}

#[test]
fn bandpass_output_is_planar() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_mesh(dir.path(), "grid.obj", &corpus::quad_grid(6, 6));
    let out_path = dir.path().join("out.obj");
    let out = pmspace(&[
        "bandpass", s(&grid), "--cases", "affine", "--low", "0.1", "--high", "0.5", "--gain", "0.2", "-o",
        s(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mesh = load_mesh(&out_path).unwrap();
    assert!(planarity_report(&mesh).unwrap().max <= 1e-8);
}

#[test]
fn verify_exit_code_follows_audits() {
    let out = pmspace(&["verify", "--suite", "stencil", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let all_pass = v["passed"].as_bool().unwrap();
    assert_eq!(all_pass, v["audits"].as_array().unwrap().iter().all(|a| a["passed"] == true));
    assert_eq!(out.status.code(), Some(if all_pass { 0 } else { 1 }));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(pmspace(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(pmspace(&["analyze"]).status.code(), Some(2));
    assert_eq!(pmspace(&["analyze", "x.obj", "--bogus"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_mesh(dir.path(), "grid.obj", &corpus::quad_grid(2, 2));
    let out = pmspace(&["dual", s(&grid), "-o", s(&dir.path().join("d.obj"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let missing = pmspace(&["analyze", s(&dir.path().join("missing.obj"))]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_mesh(dir.path(), "grid.obj", &corpus::wavy_grid(4, 4));
    let run = |args: &[&str]| {
        let out = pmspace(args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let a = ["verify", "--suite", "theorem1", "--seed", "7", "--format", "json"];
    assert_eq!(run(&a), run(&a));
    let e = ["eigenshapes", s(&grid), "--cases", "vertical", "--count", "5"];
    assert_eq!(run(&e), run(&e));
    let b = ["bandpass", s(&grid), "--cases", "parallel", "--gain", "0.3"];
    assert_eq!(run(&b), run(&b));
}

#[test]
fn obj_floats_use_twelve_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write_mesh(dir.path(), "grid.obj", &corpus::wavy_grid(3, 3));
    let out = pmspace(&["bandpass", s(&grid), "--cases", "affine", "--gain", "0.37"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for line in text.lines().filter(|l| l.starts_with("v ")) {
        for tok in line.split_whitespace().skip(1) {
            let mantissa = tok.split(['e', 'E']).next().unwrap();
            let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
            let digits = digits.trim_start_matches('0').len();
            assert!(digits <= 12, "{tok}");
            tok.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn subdivide_and_flatten_round_out_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let patch = write_mesh(dir.path(), "patch.obj", &corpus::hex_patch(1));
    let sub = dir.path().join("sub.obj");
    let flat = dir.path().join("flat.obj");
    assert_eq!(pmspace(&["subdivide", s(&patch), "-o", s(&sub)]).status.code(), Some(0));
    assert_eq!(pmspace(&["flatten", s(&sub), "-o", s(&flat)]).status.code(), Some(0));
    let m = load_mesh(&flat).unwrap();
    assert!(m.vertices().iter().all(|p| p.z == 0.0));
}
