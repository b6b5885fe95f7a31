//! End-to-end tests of the `riemsimplex` binary: exit codes, output
//! formats, seed handling, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

use riemsimplex::io::write_json;
use riemsimplex_cli::commands::{generate_mesh_doc, GenerateKind, GenerateParams};

fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_riemsimplex"));
    c.args(args);
    c.env_remove("RIEMSIMPLEX_SEED");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary launches")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_generated(dir: &Path, name: &str, params: &GenerateParams) -> String {
    let doc = generate_mesh_doc(params).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, write_json(&doc)).unwrap();
    path.to_string_lossy().into_owned()
}

fn grid_torus_params(n: usize) -> GenerateParams {
    GenerateParams {
        kind: GenerateKind::GridTorus,
        level: 0,
        radius: 1.0,
        n,
        periods: vec![1.0, 1.0],
        perturb: 0.0,
        seed: 0,
    }
}

fn icosphere_params(level: usize) -> GenerateParams {
    GenerateParams {
        kind: GenerateKind::Icosphere,
        level,
        radius: 1.0,
        n: 0,
        periods: vec![],
        perturb: 0.0,
        seed: 0,
    }
}

fn sphere_triangle_doc() -> String {
    let h = 0.01_f64;
    serde_json::json!({
        "manifold": {"kind": "sphere", "dim": 2, "radius": 1.0},
        "vertices": [
            [0.0, 0.0, 1.0],
            [h.sin(), 0.0, h.cos()],
            [0.0, h.sin(), h.cos()],
        ],
        "simplices": [[0, 1, 2]],
    })
    .to_string()
}

#[test]
fn certify_small_sphere_triangle_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tri.json");
    std::fs::write(&path, sphere_triangle_doc()).unwrap();
    let out = run(&["certify", "--mesh", path.to_str().unwrap(), "--seed", "1"], &[]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\"verdict\": \"Certified\""), "{text}");
    assert!(text.contains("\"all_certified\": true"));
}

#[test]
fn unknown_flag_exits_two_with_usage() {
    let out = run(&["certify", "--mesh", "x.json", "--bogus"], &[]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn invalid_mesh_reports_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let doc = serde_json::json!({
        "manifold": {"kind": "sphere", "dim": 2, "radius": 1.0},
        "vertices": [[0.0, 0.0, 1.0], [0.0, 1.25, 0.0], [1.0, 0.0, 0.0]],
        "simplices": [[0, 1, 9]],
    });
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = run(&["certify", "--mesh", path.to_str().unwrap()], &[]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("vertex 1"), "{err}");
    assert!(err.contains("simplex 0"), "{err}");
}

#[test]
fn env_seed_fallback_matches_flag() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_generated(dir.path(), "t6.json", &grid_torus_params(6));
    let flagged = run(
        &["karcher", "--mesh", &mesh, "--samples", "8", "--seed", "42"],
        &[],
    );
    let env = run(
        &["karcher", "--mesh", &mesh, "--samples", "8"],
        &[("RIEMSIMPLEX_SEED", "42")],
    );
    assert_eq!(code(&flagged), 0);
    assert_eq!(flagged.stdout, env.stdout);

    let bad = run(&["karcher", "--mesh", &mesh], &[("RIEMSIMPLEX_SEED", "not-a-number")]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn triangulate_check_icosahedron_level0_identifies_condition1() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_generated(dir.path(), "ico0.json", &icosphere_params(0));
    let out = run(
        &[
            "triangulate-check",
            "--mesh",
            &mesh,
            "--t0",
            "0.4",
            "--seed",
            "3",
        ],
        &[],
    );
    assert_eq!(code(&out), 1, "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let tri = &report["triangulation"];
    assert_eq!(tri["verdict"], serde_json::json!(false));
    let failed: Vec<u64> = tri["failed_conditions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert!(failed.contains(&1), "failed conditions: {failed:?}");
}

#[test]
fn karcher_converges_on_grid_torus() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_generated(dir.path(), "t6.json", &grid_torus_params(6));
    let out = run(&["karcher", "--mesh", &mesh, "--samples", "12", "--seed", "5"], &[]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["all_converged"], serde_json::json!(true));
}

#[test]
fn out_flag_writes_report_file_and_keeps_stdout_empty() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_generated(dir.path(), "t6.json", &grid_torus_params(6));
    let report_path = dir.path().join("report.json");
    let out = run(
        &[
            "certify",
            "--mesh",
            &mesh,
            "--seed",
            "2",
            "--out",
            report_path.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(&report_path).unwrap();
    serde_json::from_str::<serde_json::Value>(&text).unwrap();
}

#[test]
fn csv_is_available_exactly_where_a_series_exists() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_generated(dir.path(), "t6.json", &grid_torus_params(6));

    let scatter = run(
        &[
            "distort-report",
            "--mesh",
            &mesh,
            "--t0",
            "0.2",
            "--samples",
            "50",
            "--seed",
            "4",
            "--format",
            "csv",
        ],
        &[],
    );
    assert_eq!(code(&scatter), 0, "stderr: {}", stderr(&scatter));
    assert!(stdout(&scatter).starts_with("simplex,d_flat,d_manifold,ratio\n"));

    let suite = run(
        &["property-suite", "--samples", "5", "--seed", "4", "--format", "csv"],
        &[],
    );
    assert_eq!(code(&suite), 0);
    assert!(stdout(&suite).starts_with("name,samples,violations,worst_margin\n"));

    let refused = run(&["certify", "--mesh", &mesh, "--format", "csv"], &[]);
    assert_eq!(code(&refused), 2);
    assert!(stderr(&refused).contains("csv"));
}

#[test]
fn generate_rejects_bad_parameters() {
    assert_eq!(code(&run(&["generate", "--kind", "icosphere", "--level", "9"], &[])), 2);
    assert_eq!(code(&run(&["generate", "--kind", "grid-torus", "--n", "2"], &[])), 2);
    assert_eq!(
        code(&run(
            &["generate", "--kind", "grid-torus", "--periods", "1.0"],
            &[]
        )),
        2
    );
}

#[test]
fn every_subcommand_is_deterministic_at_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_generated(dir.path(), "t6.json", &grid_torus_params(6));
    let invocations: Vec<Vec<&str>> = vec![
        vec!["certify", "--mesh", &mesh, "--samples", "30", "--seed", "11"],
        vec![
            "triangulate-check",
            "--mesh",
            &mesh,
            "--t0",
            "0.2",
            "--samples",
            "2000",
            "--seed",
            "11",
        ],
        vec!["karcher", "--mesh", &mesh, "--samples", "10", "--seed", "11"],
        vec![
            "generate",
            "--kind",
            "icosphere",
            "--level",
            "1",
            "--perturb",
            "0.01",
            "--seed",
            "11",
        ],
        vec![
            "distort-report",
            "--mesh",
            &mesh,
            "--t0",
            "0.2",
            "--samples",
            "60",
            "--seed",
            "11",
        ],
        vec!["property-suite", "--samples", "6", "--seed", "11"],
    ];
    for args in invocations {
        let a = run(&args, &[]);
        let b = run(&args, &[]);
        assert!(!a.stdout.is_empty(), "no output for {args:?}");
        assert_eq!(a.stdout, b.stdout, "nondeterministic output for {args:?}");
        assert_eq!(code(&a), code(&b));
    }
}
