use std::path::Path;
use std::process::{Command, Output};

use magic_harvest::phase_space::DensityMatrix;
use num_complex::Complex64;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magic-harvest"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_state(dir: &Path, name: &str, rho: &DensityMatrix) -> String {
    let path = dir.join(name);
    std::fs::write(&path, rho.to_json()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn mana_of_reference_states() {
    let dir = tempfile::tempdir().unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    let cases = [
        (DensityMatrix::maximally_mixed(3).unwrap(), "0.000000000000"),
        (DensityMatrix::basis(3, 0).unwrap(), "0.000000000000"),
        (
            DensityMatrix::pure(&[z, Complex64::new(s, 0.0), Complex64::new(-s, 0.0)]).unwrap(),
            "0.510825623766",
        ),
    ];
    for (i, (rho, expected)) in cases.iter().enumerate() {
        let file = write_state(dir.path(), &format!("s{i}.json"), rho);
        let out = bin(&["mana", &file]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(stdout(&out).trim(), *expected);
    }
}

#[test]
fn mana_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{\"dim\": 3, \"entries\": [").unwrap();
    assert_eq!(bin(&["mana", garbage.to_str().unwrap()]).status.code(), Some(2));

    let wrong_shape = dir.path().join("shape.json");
    std::fs::write(&wrong_shape, r#"{"dim": 3, "entries": [[[1,0]]]}"#).unwrap();
    assert_eq!(bin(&["mana", wrong_shape.to_str().unwrap()]).status.code(), Some(2));

    // parses, but the trace is 2
    let bad_trace = dir.path().join("trace.json");
    std::fs::write(
        &bad_trace,
        r#"{"dim": 3, "entries": [[[1,0],[0,0],[0,0]],[[0,0],[1,0],[0,0]],[[0,0],[0,0],[0,0]]]}"#,
    )
    .unwrap();
    let out = bin(&["mana", bad_trace.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trace"));

    let missing = dir.path().join("missing.json");
    assert_eq!(bin(&["mana", missing.to_str().unwrap()]).status.code(), Some(4));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(bin(&["sweep", "--steps", "many"]).status.code(), Some(2));
    assert_eq!(bin(&["harvest", "--eps-levels", "2"]).status.code(), Some(2));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_parameters_exit_three() {
    assert_eq!(bin(&["harvest", "--lambda=-1"]).status.code(), Some(3));
    assert_eq!(bin(&["sweep", "--min", "3", "--max", "1"]).status.code(), Some(3));
    assert_eq!(bin(&["optimize", "--lambda", "0"]).status.code(), Some(3));
}

#[test]
fn sweep_file_contract() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = bin(&["sweep", "--min", "0", "--max", "5", "--steps", "101", "--output", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap(), "rerun is not byte-identical");

    let mut reader = csv::Reader::from_reader(text.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, magic_harvest::harvest::SweepRow::HEADER);
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    let peak = rows
        .iter()
        .max_by(|x, y| x[4].total_cmp(&y[4]))
        .unwrap();
    assert!((peak[0] - 0.752).abs() <= 0.05, "peak at {}", peak[0]);
}

#[test]
fn sweep_to_unwritable_path_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("no/such/dir/out.csv");
    let out = bin(&["sweep", "--steps", "3", "--output", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn harvest_json_and_csv() {
    let out = bin(&["harvest", "--omega-sigma", "1", "--lambda", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let m = doc["mana_closed"].as_f64().unwrap();
    assert!((m - 1.0549048133513978e-04).abs() < 1e-15);

    let out = bin(&["harvest", "--omega", "2", "--sigma-t", "0.5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("1.0000000000000000e0,"));
}

#[test]
fn harvest_quadrature_with_fewer_levels() {
    let out = bin(&[
        "harvest", "--omega-sigma", "1", "--method", "quadrature", "--eps-levels", "5", "--tol", "1e-9",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["diagnostics"]["q_samples"].as_array().unwrap().len(), 5);
    let q = doc["q"].as_f64().unwrap();
    assert!((q - 8.309515957242518e-05).abs() < 1e-4 * 8.3e-5);
}

#[test]
fn optimize_prints_peak() {
    let out = bin(&["optimize", "--lambda", "0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("x_star = 0.75179"), "{text}");
}

#[test]
fn verify_passes() {
    let out = bin(&["verify"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}
