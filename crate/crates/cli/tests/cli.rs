use serde_json::Value;
use std::process::{Command, Output};

fn flatdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatdiff")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str, contents: &str) -> std::path::PathBuf {
    let p = std::env::temp_dir().join(format!("flatdiff-cli-{}-{name}", std::process::id()));
    std::fs::write(&p, contents).unwrap();
    p
}

#[test]
fn validate_reports_topology() {
    let out = flatdiff(&["validate", "builtin:octagon"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "validate");
    assert_eq!(v["genus"], 2);
    assert_eq!(v["stratum"], "H(2)");
    assert!(String::from_utf8_lossy(&out.stderr).contains("genus 2, translation"));
}

#[test]
fn validate_csv_lists_cone_points() {
    let out = flatdiff(&["validate", "builtin:pillowcase", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("id,angle,order,marked,sigma"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn torus_pairing_matches_the_constant_form() {
    let out = flatdiff(&["pair", "builtin:square_torus_marked", "--eta", "constant:0,0.3-0.7i", "--h", "0.2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let value = &v["result"]["value"];
    let (re, im) = (value[0].as_f64().unwrap(), value[1].as_f64().unwrap());
    assert!((re - 0.3).abs() < 1e-9 && (im + 0.7).abs() < 1e-9, "{value}");
}

#[test]
fn input_errors_exit_with_two() {
    let bad = scratch("bad.json", "{\"polygons\": [");
    for args in [
        vec!["validate", bad.to_str().unwrap()],
        vec!["validate", "builtin:no_such_surface"],
        vec!["verify", "builtin:octagon", "no-such-suite"],
        vec!["pair", "builtin:octagon", "--eta", "harmonic-basis:99"],
        vec!["pair", "builtin:octagon", "--eta", "harmonic-basis:0", "--radius", "5"],
        vec!["verify", "builtin:pillowcase", "mean-value", "--tol", "-1"],
    ] {
        let out = flatdiff(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
    let _ = std::fs::remove_file(bad);
}

#[test]
fn malformed_json_is_reported_once() {
    let bad = scratch("trunc.json", "{\"polygons\": [");
    let out = flatdiff(&["validate", bad.to_str().unwrap()]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.matches("EOF").count(), 1, "{err}");
    let _ = std::fs::remove_file(bad);
}

#[test]
fn verify_mean_value_writes_report() {
    let path = std::env::temp_dir().join(format!("flatdiff-cli-{}-mv.json", std::process::id()));
    let out = flatdiff(&["verify", "builtin:pillowcase", "mean-value", "--trials", "50", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "verify");
    assert_eq!(v["pass"], true);
    assert_eq!(v["suites"][0]["suite"], "mean-value");
    let _ = std::fs::remove_file(path);
}

#[test]
fn basis_export_has_one_form_per_genus() {
    let out = flatdiff(&["basis", "export", "builtin:octagon", "--kind", "holomorphic", "--h", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["forms"].as_array().map(Vec::len), Some(2));
}
