use std::process::Command;

use serde_json::Value;

fn wfa(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wfa")).args(args).env_remove("WFA_THREADS").output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn unknown_subcommand_and_bad_values_are_usage_errors() {
    assert_eq!(wfa(&["frobnicate"]).0, 1);
    assert_eq!(wfa(&["roots", "--side", "zero", "--c", "abc"]).0, 1);
    assert_eq!(wfa(&["--model", "custom", "roots", "--side", "zero", "--c", "2"]).0, 1);
}

#[test]
fn roots_json_lists_the_two_real_roots() {
    let (code, out, _) = wfa(&["roots", "--side", "zero", "--c", "2.5", "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["command"], "roots");
    assert!(out.contains("5.0000000000000000e-1") && out.contains("2.0000000000000000e0"), "{out}");
}

#[test]
fn nicholson_nu0_is_printed() {
    let (code, out, _) = wfa(&["nicholson", "nu0", "--json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let nu0 = v["nu0"].as_f64().unwrap();
    assert!((nu0 - 2.808).abs() < 5e-3, "{nu0}");
}

#[test]
fn profile_solve_writes_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("front.csv");
    let (code, _, err) = wfa(&["profile", "solve", "--h", "0.2", "--c", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,phi,dphi"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() >= 4096);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0] && w[1][1] >= w[0][1] - 1e-9));
}

#[test]
fn profile_below_the_lower_curve_needs_force() {
    let (code, _, err) = wfa(&["profile", "solve", "--h", "0", "--c", "1.5"]);
    assert_eq!(code, 1);
    assert!(err.contains("--force"), "{err}");
}
