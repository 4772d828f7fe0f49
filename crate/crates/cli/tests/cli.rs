//! End-to-end runs of the `lienard` binary.

use std::io::Write;
use std::process::{Command, Output};

use lienard_core::expr::{normalize, parse_with};
use serde_json::Value;

fn lienard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lienard")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

/// Parsing a printed expression and normalizing prints the same text.
fn reparses(text: &str, vars: &[&str]) {
    let e = parse_with(text, vars, &[]).unwrap_or_else(|e| panic!("{text}: {e}"));
    assert_eq!(normalize(&e).to_string(), text);
}

#[test]
fn power_law_json() {
    let out = lienard(&["classify", "--f", "0", "--g", "x^3", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["dimension"], 2);
    assert_eq!(r["algebra"], "A2");
    assert_eq!(r["case"]["name"], "power-law");
    assert_eq!(r["case"]["params"]["n"]["exact"], "3");
    assert_eq!(r["symbolic"], true);
    assert_eq!(r["config"]["samples"], 64);
    assert_eq!(r["config"]["tolerances"]["constancy"], 1e-9);
}

#[test]
fn linearizable_instance_verifies() {
    let out = lienard(&["classify", "--f", "1/x", "--g", "x/2", "--verify", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["dimension"], 8);
    assert_eq!(r["algebra"], "sl(3,R)");
    assert_eq!(r["transform"]["Phi"], "1/2*x^2");
    let v = &r["verification"];
    for g in v["generators"].as_array().unwrap() {
        assert_eq!(g["pass"], true, "{g}");
    }
    assert_eq!(v["transformation"]["residual"]["pass"], true);
}

#[test]
fn foreign_symbol_is_an_input_error() {
    let out = lienard(&["classify", "--f", "x + t", "--g", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown symbol `t` at position 4"), "{err}");
}

#[test]
fn invalid_settings_are_input_errors() {
    for args in [
        &["classify", "--f", "0", "--g", "x", "--samples", "8"][..],
        &["classify", "--f", "0", "--g", "x", "--domain", "2:1"],
        &["classify", "--f", "0", "--g", "x", "--tol-residual", "0"],
        &["classify", "--f", "0", "--g", "x +"],
    ] {
        let out = lienard(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn undecidable_input_is_inconclusive() {
    let out = lienard(&["classify", "--f", "0", "--g", "log(-x)", "--json"]);
    assert_eq!(out.status.code(), Some(2));
    let r = json_of(&out);
    assert_eq!(r["inconclusive"], true);
    assert_eq!(r["case"]["name"], "generic");
}

#[test]
fn text_report() {
    let out = lienard(&["classify", "--f", "1", "--g", "exp(-4*x)"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("case: inverse-cube"), "{text}");
    assert!(text.contains("A3,8 = sl(2,R) (dimension 3)"), "{text}");
    assert!(text.contains("Phi = exp(x)"), "{text}");
}

#[test]
fn numeric_only_mode_agrees_on_dimension() {
    for (f, g) in [("0", "x^3"), ("1/x", "x/2"), ("0", "exp(x) + x^2"), ("1", "exp(-4*x)")] {
        let sym = json_of(&lienard(&["classify", "--f", f, "--g", g, "--json"]));
        let out = lienard(&["classify", "--f", f, "--g", g, "--json", "--mode", "numeric-only"]);
        let num = json_of(&out);
        assert_eq!(num["dimension"], sym["dimension"], "{f}, {g}");
        assert_eq!(num["transform"]["M"], "numeric");
        if num["case"]["name"] != "generic" {
            assert_eq!(num["symbolic"], false, "{f}, {g}");
        }
    }
}

#[test]
fn printed_expressions_reparse() {
    for (f, g) in [("0", "x^3"), ("1/x", "x/2"), ("0", "x + x^(-3)"), ("1", "exp(-4*x)"), ("2/x", "x^(-5)")] {
        let r = json_of(&lienard(&["classify", "--f", f, "--g", g, "--json"]));
        reparses(r["input"]["f_normalized"].as_str().unwrap(), &["x"]);
        reparses(r["input"]["g_normalized"].as_str().unwrap(), &["x"]);
        for gen in r["generators"].as_array().unwrap() {
            let mut vars = vec!["t", "y", "x"];
            if let Value::Object(h) = &gen["harmonic"] {
                vars.push(h["cos"].as_str().unwrap());
                vars.push(h["sin"].as_str().unwrap());
            }
            for key in ["tau", "eta", "tau_x", "eta_x"] {
                reparses(gen[key].as_str().unwrap(), &vars);
            }
        }
    }
}

#[test]
fn batch_keeps_input_order() {
    let mut file = std::env::temp_dir();
    file.push(format!("lienard-batch-{}.txt", std::process::id()));
    let lines = ["0 ; x^3", "# skipped", "", "0 ; exp(2*x)", "1/x ; x/2", "0 ; x + x^(-3)", "0 ; exp(x) + x^2"];
    std::fs::File::create(&file).unwrap().write_all(lines.join("\n").as_bytes()).unwrap();
    let out = lienard(&["classify", "--batch", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Vec<Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let dims: Vec<u64> = rows.iter().map(|r| r["dimension"].as_u64().unwrap()).collect();
    let numbers: Vec<u64> = rows.iter().map(|r| r["line"].as_u64().unwrap()).collect();
    assert_eq!(dims, [2, 2, 8, 3, 1]);
    assert_eq!(numbers, [1, 4, 5, 6, 7]);

    std::fs::write(&file, "0 ; x^3\nnot a pair\n0 ; log(-x)\n").unwrap();
    let out = lienard(&["classify", "--batch", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let rows: Vec<Value> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1]["error"].as_str().unwrap().contains("not a pair"));
    std::fs::remove_file(&file).unwrap();
}

#[test]
fn selftest_passes() {
    let out = lienard(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 7, "{text}");
}

#[test]
fn selftest_filter_runs_only_ermakov_pinney() {
    let out = lienard(&["selftest", "--filter", "ep"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("1 instances, dimensions {3}"), "{text}");
    assert!(!text.contains("criterion 6"), "{text}");
}

#[test]
fn corrupted_fixture_fails_and_names_the_case() {
    let out = lienard(&["selftest", "--filter", "power", "--corrupt-fixture"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("[FAIL] criterion 3"), "{text}");
    assert!(text.contains("f = 0, g = x^3"), "{text}");
}
