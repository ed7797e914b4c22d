//! One line per acceptance criterion. Criterion 7 is reported twice: once
//! against the `d^2/2` far-field normalisation as literally stated, which
//! cannot hold, and once against the true `d^2/4` limit.

use std::path::Path;
use std::process::{Command, ExitCode};

use bubblekit_core::verify::{self, Check, Tolerances};

fn line(c: &Check) {
    let verdict = if c.passed { "PASS" } else { "FAIL" };
    println!("criterion {} {verdict}: {} ({})", c.criterion, c.name, c.detail);
}

fn output_of(args: &[&str]) -> Vec<u8> {
    let out =
        Command::new(env!("CARGO_BIN_EXE_bubblekit")).args(args).env_remove("BUBBLEKIT_THREADS").output().unwrap();
    let mut bytes = out.stdout;
    bytes.extend(out.status.code().unwrap_or(-1).to_le_bytes());
    bytes
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("identity.json");
    std::fs::write(&q, "[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]").unwrap();
    let scenarios = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios");
    let cluster = scenarios.join("cluster.json");
    let interior = scenarios.join("interior.json");
    let runs: Vec<Vec<&str>> = vec![
        vec!["constants", "--n", "6"],
        vec!["vortex", "--n", "5", "--m", "3", "--Q", q.to_str().unwrap(), "--seed", "7"],
        vec!["predict", "--config", cluster.to_str().unwrap(), "--eps", "1e-4"],
        vec!["sweep", "--config", interior.to_str().unwrap(), "--eps-list", "1e-2,1e-3,1e-4,1e-5"],
        vec!["sweep", "--config", cluster.to_str().unwrap(), "--eps-list", "1e-2,1e-3,1e-4,1e-5"],
        vec!["verify"],
    ];
    let mut differing = Vec::new();
    for args in &runs {
        if output_of(args) != output_of(args) {
            differing.push(args[0]);
        }
    }
    let detail = if differing.is_empty() {
        format!("{} invocations repeated byte-identically", runs.len())
    } else {
        format!("output differs for {differing:?}")
    };
    Check { criterion: 8, name: "determinism", passed: differing.is_empty(), detail }
}

fn main() -> ExitCode {
    let tol = Tolerances::default();
    let literal = verify::interaction_calculus_half_chord(&tol);
    let mut checks = verify::run_suite(&tol);
    let corrected = checks.pop().expect("suite has seven checks");
    checks.iter().for_each(line);
    line(&literal);
    line(&corrected);
    let det = determinism();
    line(&det);

    checks.push(corrected);
    checks.push(det);
    let failed: Vec<u8> = checks.iter().filter(|c| !c.passed).map(|c| c.criterion).collect();
    if literal.passed {
        println!("note: the d^2/2 far-field check passed; the known defect no longer reproduces");
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass (criterion 7 with the d^2/4 far field)");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
