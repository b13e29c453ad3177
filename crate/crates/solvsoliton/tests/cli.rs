//! End-to-end tests of the command-line surface.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_solvsoliton"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn fixtures_list_names_catalog() {
    let out = run(&["fixtures", "--list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in [
        "abelian_n",
        "h3",
        "h5",
        "h3xh3",
        "hyperbolic_plane",
        "sl2",
        "example_6_1",
        "example_6_2",
        "example_6_3",
    ] {
        assert!(text.lines().any(|l| l == name), "missing {name}");
    }
}

#[test]
fn soliton_verdict_is_deterministic_json() {
    let a = run(&["soliton", "fixtures/h3", "--json"]);
    let b = run(&["soliton", "fixtures/h3", "--json"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout, "--json output must be byte-identical");
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["class"], "algebraic");
    assert!((v["c"].as_f64().unwrap() - (-1.5)).abs() < 1e-10);
    assert!(v["residual"].as_f64().unwrap() < 1e-10);
    assert!(v["tolerances"]["soliton"].as_f64().unwrap() > 0.0);
}

#[test]
fn cross_document_isometry_of_example_6_2() {
    // soliton on h5 is algebraic; modify on the example is not; their Ricci
    // spectra agree entry by entry.
    let h5 = run(&["soliton", "fixtures/h5", "--json"]);
    assert!(h5.status.success());
    let h5v: serde_json::Value = serde_json::from_str(&stdout(&h5)).unwrap();
    assert_eq!(h5v["class"], "algebraic");

    let modified = run(&["modify", "fixtures/example_6_2", "--criterion", "--json"]);
    assert!(modified.status.success());
    let mv: serde_json::Value = serde_json::from_str(&stdout(&modified)).unwrap();
    assert_ne!(mv["class"], "algebraic");
    assert!(mv["residuals"]["algebraic"].as_f64().unwrap() > 0.01);
    assert_eq!(mv["criterion"]["verdicts_consistent"], true);

    let spec_h5: Vec<f64> = h5v["ricci_spectrum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    let spec_mod: Vec<f64> = mv["ricci_spectrum_modified"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(spec_h5.len(), spec_mod.len());
    for (a, b) in spec_h5.iter().zip(spec_mod.iter()) {
        assert!((a - b).abs() < 1e-9, "spectra differ: {a} vs {b}");
    }
}

#[test]
fn dumped_fixture_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h5.json");
    let dump = run(&["fixtures", "--dump", "h5"]);
    assert!(dump.status.success());
    std::fs::write(&path, dump.stdout).unwrap();

    let from_file = run(&["soliton", path.to_str().unwrap(), "--json"]);
    let from_catalog = run(&["soliton", "fixtures/h5", "--json"]);
    assert!(from_file.status.success());
    assert_eq!(from_file.stdout, from_catalog.stdout);
}

#[test]
fn flow_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("trace.csv");
    let out = run(&[
        "flow",
        "fixtures/h3",
        "--t-end",
        "0.3",
        "--samples",
        "11",
        "--out",
        csv_path.to_str().unwrap(),
        "--json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["termination"], "completed");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,sc,eig_1"));
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn schema_violations_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    // i >= j entry
    std::fs::write(
        &path,
        r#"{"format_version":1,"dim":3,"basis":["X","Y","Z"],
            "brackets":[{"i":1,"j":0,"coeffs":{"2":1.0}}]}"#,
    )
    .unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["soliton", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["fixtures", "--dump", "not_a_fixture"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn jacobi_violation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    // h3 plus [Y, Z] = Y breaks the Jacobi identity with residual 1.
    std::fs::write(
        &path,
        r#"{"format_version":1,"dim":3,"basis":["X","Y","Z"],
            "brackets":[{"i":0,"j":1,"coeffs":{"2":1.0}},
                        {"i":1,"j":2,"coeffs":{"1":1.0}}]}"#,
    )
    .unwrap();
    let out = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn strict_profile_is_accepted() {
    let out = run(&["soliton", "fixtures/h3", "--tolerance-profile", "strict", "--json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["class"], "algebraic");
    let soliton_tol = v["tolerances"]["soliton"].as_f64().unwrap();
    assert!((soliton_tol - 1e-8).abs() < 1e-20);
}

#[test]
fn search_is_deterministic() {
    let a = run(&["search", "fixtures/h3", "--restarts", "2", "--seed", "5", "--json"]);
    let b = run(&["search", "fixtures/h3", "--restarts", "2", "--seed", "5", "--json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert!(v["best_residual"].as_f64().unwrap() < 1e-7);
}

#[test]
fn inline_phi_block_is_accepted() {
    // phi = 0 presented inline: one kbasis matrix, zero coefficients.
    let dump = run(&["fixtures", "--dump", "h3"]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h3.json");
    std::fs::write(&path, dump.stdout).unwrap();
    let phi = r#"{"kbasis":[[0,1,0,-1,0,0,0,0,0]],"images":[[0.0],[0.0],[0.0]]}"#;
    let out = run(&["modify", path.to_str().unwrap(), "--phi", phi, "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["class"], "algebraic");
    assert_eq!(v["conditions"]["all_pass"], true);
}
