use std::path::Path;
use std::process::Command;

use serde_json::Value;
use stencilforge::backend::read_sfgd;
use stencilforge::sparse::read_traces;

fn sf(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sf")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn cfd_runs_write_fields_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    for case in ["convection", "burgers", "poisson"] {
        let out = dir.path().join(case);
        let report = dir.path().join(format!("{case}.json"));
        let (code, stdout) =
            sf(&["run", case, "--out", out.to_str().unwrap(), "--json", report.to_str().unwrap()]);
        assert_eq!(code, 0, "{case}: {stdout}");
        let summary = json(&out.join("summary.json"));
        assert!(summary["min"].is_number() && summary["max"].is_number());
        assert_eq!(json(&report)["pass"], Value::Bool(true));
        let field = if case == "poisson" { "p" } else { "u" };
        let init = read_sfgd(&out.join(format!("{field}_initial.sfgd"))).unwrap();
        let fin = read_sfgd(&out.join(format!("{field}_final.sfgd"))).unwrap();
        assert_eq!(init.shape(), fin.shape());
    }
    let poisson = json(&dir.path().join("poisson/summary.json"));
    assert_eq!(poisson["residuals"].as_array().unwrap().len(), 101);
}

#[test]
fn acoustic_run_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let (code, _) = sf(&["run", "acoustic", "--grid", "41", "--order", "4", "--tn", "0.2", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let (t, data, np) = read_traces(&out.join("traces.csv")).unwrap();
    assert_eq!(np, 41);
    assert_eq!(data.len(), t.len() * np);
    assert!(data.iter().any(|v| *v != 0.0));
    assert_eq!(read_sfgd(&out.join("vp.sfgd")).unwrap().shape(), &[121, 121]);
}

#[test]
fn adjoint_verification_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = vec![];
    for k in 0..2 {
        let p = dir.path().join(format!("r{k}.json"));
        let (code, stdout) = sf(&["verify", "adjoint", "--order", "2,4", "--grid", "24", "--seed", "7", "--json", p.to_str().unwrap()]);
        assert_eq!(code, 0, "{stdout}");
        assert!(stdout.contains("rel. error"));
        reports.push(json(&p));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[0]["config"]["seed"], 7);
}

#[test]
fn emit_writes_c_source() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("k.c");
    let (code, _) = sf(&["emit", "--order", "4", "--grid", "20", "--out", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let src = std::fs::read_to_string(&p).unwrap();
    assert!(src.contains("void kernel("));
}

#[test]
fn failed_tolerances_and_bad_input_set_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f");
    // One iteration cannot halve the misfit.
    let (code, _) = sf(&["fwi", "--iterations", "1", "--nsrc", "2", "--grid", "31", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.join("fwi_history.json").exists());
    let (code, _) = sf(&["run", "acoustic", "--grid", "1,2,3", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    let (code, _) = sf(&["run", "convection", "--dt", "1.0", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    let (code, _) = sf(&["frobnicate"]);
    assert_eq!(code, 2);
}
