//! Acceptance criteria 1 to 9, one pass/fail line each.
//!
//! Tolerances come from `tolerances.toml`, the table `mellin-radon selftest`
//! reads. Everything runs in one test so that wall-clock bounds are not
//! distorted by concurrently running tests.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use mellin_radon::selftest::{run_criterion, CriterionResult, Level, Tolerances};

fn report(line: &str) {
    // Direct handle writes bypass the harness capture, so the lines show up
    // in every test log.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn describe(r: &CriterionResult) -> String {
    let worst = r
        .rows
        .iter()
        .filter(|row| row.tolerance > 0.0)
        .map(|row| row.residual / row.tolerance)
        .fold(0.0f64, f64::max);
    match r.first_failure() {
        None => format!(
            "criterion {}: PASS  {} ({} checks, worst residual/tolerance {worst:.2e}, {:.1} s)",
            r.number,
            r.title,
            r.rows.len(),
            r.seconds
        ),
        Some(f) => format!("criterion {}: FAIL  {} ({f})", r.number, r.title),
    }
}

/// Runs `selftest` at `level` through the binary; returns success, seconds
/// and the criterion numbers listed in its table.
fn selftest_binary(level: &str) -> (bool, f64, Vec<u8>, String) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_mellin-radon"))
        .args(["selftest", "--level", level])
        .output()
        .expect("binary runs");
    let seconds = start.elapsed().as_secs_f64();
    let table = String::from_utf8_lossy(&out.stdout).into_owned();
    let listed = table
        .lines()
        .filter_map(|l| l.strip_prefix("# criterion "))
        .filter_map(|l| l.split(':').next()?.parse().ok())
        .collect();
    (out.status.success(), seconds, listed, String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn acceptance_criteria() {
    let tol = Tolerances::builtin();
    let mut failed = Vec::new();

    for n in 1..=8u8 {
        let r = run_criterion(n, &tol);
        report(&describe(&r));
        for row in &r.rows {
            report(&format!(
                "    {:<72} {:>11.3e} <= {:.3e}  {}",
                row.identity,
                row.residual,
                row.tolerance,
                if row.passed { "ok" } else { "FAIL" }
            ));
        }
        if !r.passed() {
            failed.push(n);
        }
    }

    let (quick_ok, quick_s, quick_listed, quick_err) = selftest_binary("quick");
    let (full_ok, full_s, full_listed, full_err) = selftest_binary("full");
    let c9 = quick_ok
        && full_ok
        && quick_listed == Level::Quick.criteria()
        && full_listed == Level::Full.criteria()
        && quick_s <= tol.runtime.quick_seconds
        && full_s <= tol.runtime.full_seconds;
    report(&format!(
        "criterion 9: {}  selftest quick {quick_s:.1} s (<= {}), criteria {quick_listed:?}; full {full_s:.1} s (<= {}), criteria {full_listed:?}",
        if c9 { "PASS" } else { "FAIL" },
        tol.runtime.quick_seconds,
        tol.runtime.full_seconds,
    ));
    if !c9 {
        report(&format!("    quick stderr: {quick_err}\n    full stderr: {full_err}"));
        failed.push(9);
    }

    assert!(failed.is_empty(), "failed acceptance criteria: {failed:?}");
}
