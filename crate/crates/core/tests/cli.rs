//! The command-line front end: output shapes and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use ncpnorm::algebra::ComplexMatrix;
use ncpnorm::io::MatrixFile;
use num_complex::Complex64;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncpnorm"))
        .args(args)
        .env_remove("NCPNORM_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_family(dir: &Path, name: &str, family: &[ComplexMatrix]) -> String {
    let path = dir.join(name);
    std::fs::write(&path, MatrixFile::from_family(family).to_json()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn sample_family() -> Vec<ComplexMatrix> {
    vec![
        ComplexMatrix::from_fn(2, |i, j| Complex64::new(0.3 * i as f64 - 0.1, 0.2 * j as f64)),
        ComplexMatrix::unit(2, 0, 1),
    ]
}

#[test]
fn gadget_verification() {
    let out = run(&["gadgets", "verify", "--n", "5", "--kind", "full"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["checked"], 120);
    let out = run(&["gadgets", "verify", "--n", "4", "--tolerance", "-1"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn coefficient_table_is_csv() {
    let out = run(&["coeff", "table", "--p", "3", "--max-n", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let headers = rows.headers().unwrap().clone();
    assert_eq!(&headers, vec!["n", "alpha", "coefficient"]);
    let first: Vec<String> = rows.records().next().unwrap().unwrap().iter().map(str::to_owned).collect();
    assert_eq!(first, ["1", "0", "1.5"]);
    let out = run(&["--format", "json", "coeff", "table", "--p", "3", "--max-n", "2"]);
    assert!(json(&out).is_array());
}

#[test]
fn reconstruct_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_family(dir.path(), "fam.json", &sample_family());
    let out = run(&["reconstruct", "--file", &file, "--word", "1*,2", "--p", "1.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["abs_error"].as_f64().unwrap() < 1e-4);
    for key in ["estimate_re", "estimate_im", "direct_trace_re", "direct_trace_im", "residual"] {
        assert!(v[key].is_number(), "{key}");
    }
    let out = run(&["reconstruct", "--file", &file, "--word", "1,3", "--p", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["reconstruct", "--file", &file, "--word", "1,2,1", "--p", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    let out = run(&["reconstruct", "--file", missing.to_str().unwrap(), "--word", "1", "--p", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn distribution_tables_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let fam = sample_family();
    let file = write_family(dir.path(), "x.json", &fam);
    let transposed: Vec<ComplexMatrix> = fam.iter().map(ComplexMatrix::transpose).collect();
    let other = write_family(dir.path(), "y.json", &transposed);

    let out = run(&["dist", "table", "--file", &file, "--maxdeg", "2"]);
    assert!(out.status.success());
    assert_eq!(json(&out).as_array().unwrap().len(), 1 + 4 + 16);

    let out = run(&["dist", "compare", "--file", &file, "--other", &file, "--maxdeg", "3", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["dist", "compare", "--file", &file, "--other", &other, "--maxdeg", "3", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn probe_and_defects() {
    let out = run(&["probe", "isometry", "--transpose", "2", "--level", "1", "--p", "3", "--trials", "20"]);
    assert!(out.status.success());
    assert!(json(&out)["max_gap"].as_f64().unwrap() < 1e-10);

    let dir = tempfile::tempdir().unwrap();
    let basis: Vec<ComplexMatrix> = (0..4).map(|k| ComplexMatrix::unit(2, k / 2, k % 2)).collect();
    let mut images = basis.clone();
    images[1] = images[1].scale_real(2.0);
    let path = dir.path().join("map.json");
    std::fs::write(&path, MatrixFile::from_family(&basis).with_images(&images).to_json()).unwrap();
    let path = path.to_str().unwrap();
    let out = run(&["defect", "mult", "--file", path, "--unital", "--a", "2", "--b", "3", "--p", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let defect = json(&out)["defect"].as_f64().unwrap();
    assert!((defect - 0.5).abs() < 1e-12);
    let out = run(&["defect", "adjoint", "--file", path, "--x", "2"]);
    assert!(out.status.success());
    assert!((json(&out)["defect"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
}

#[test]
fn scalar_commands() {
    let out = run(&["psi", "check", "--p", "3", "--max-n", "4"]);
    assert!(out.status.success());
    let out = run(&["fourterm", "--p", "1.7", "--trials", "20"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["pass"], true);

    let dir = tempfile::tempdir().unwrap();
    let file = write_family(dir.path(), "a.json", &sample_family()[..1]);
    let out = run(&["evennorm", "--file", &file, "--N", "2", "--p", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn even_p_check_exit_codes() {
    let out = run(&["evenp", "check", "--m", "2", "--levels", "1,2", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["pass"], true);
    let out = run(&["evenp", "check", "--m", "2", "--levels", "1", "--trials", "3", "--semifinite"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["evenp", "check", "--m", "2", "--levels", "1", "--trials", "3", "--transpose"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("precondition"));
}

#[test]
fn suite_with_config_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.toml");
    std::fs::write(
        &config,
        "seed = 5\nmodules = [\"gadget-matrices\", \"binomial-combinatorics\"]\n[tolerances]\n\"gadget.compact\" = 0.0\n[dim_caps]\ngadget-matrices = 4\n",
    )
    .unwrap();
    let report = dir.path().join("report.csv");
    let out = run(&[
        "--format",
        "csv",
        "suite",
        "run",
        "--config",
        config.to_str().unwrap(),
        "--output",
        report.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("name,"));
    assert!(text.lines().count() >= 6);
    // compact gadgets are exact, so a zero tolerance still passes
    assert_eq!(out.status.code(), Some(0), "{text}");

    std::fs::write(&config, "modules = [\"gadget-matrices\"]\n[tolerances]\n\"gadget.full_cycle\" = 0.0\n").unwrap();
    let out = run(&["suite", "run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["summary"]["failed"], 1);

    std::fs::write(&config, "unknown_key = 1\n").unwrap();
    let out = run(&["suite", "run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_flag_and_environment_agree() {
    let a = run(&["--seed", "3", "fourterm", "--p", "3", "--trials", "5"]);
    let b = run(&["--seed", "3", "fourterm", "--p", "3", "--trials", "5"]);
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_ncpnorm"))
        .args(["fourterm", "--p", "3", "--trials", "5"])
        .env("NCPNORM_SEED", "3")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
}
