//! End-to-end runs of the `mellin-radon` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mellin_radon::mellin_engine::GridFunction;
use mellin_radon::selftest::Tolerances;
use mellin_radon::transforms::{radon_forward, RadonOptions, RadonScheme};
use mellin_radon::CostExpr;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mellin-radon"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read_grid(path: &Path) -> GridFunction {
    mellin_radon::cli::config::read_grid_csv(path).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_nested_config_exits_zero() {
    let out = run_ok(&["validate", "--config", s(&data("nested3.cfg"))]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["dim"], 3);
    assert_eq!(v["depth"], 2);
}

#[test]
fn validate_rejects_alpha_above_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "; header\n[cost]\n(ces :alpha 1.5 :C 1 :a (0.5 0.5) (axis 1) (axis 2))\n").unwrap();
    let out = run(&["validate", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("(0, 1]") && err.contains("line 3"), "{err}");
}

#[test]
fn validate_rejects_duplicate_axis() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dup.cfg");
    std::fs::write(&cfg, "[cost]\n(ces :alpha 0.5 :C 1 :a (0.5 0.5) (axis 1) (axis 1))\n").unwrap();
    let out = run(&["validate", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("structural error"), "{}", stderr(&out));
}

#[test]
fn missing_files_are_io_failures() {
    let out = run(&["validate", "--config", "/nonexistent/scene.cfg"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn usage_errors_are_validation_failures() {
    assert_eq!(run(&["forward", "--config", s(&data("demo_forward.cfg"))]).status.code(), Some(2));
    assert_eq!(run(&["selftest", "--level", "medium"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let r = run(&["forward", "--config", s(&data("demo_forward.cfg")), "--mode", "kernel", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2), "{}", stderr(&r));
}

#[test]
fn forward_is_bit_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for mode in ["radon", "profit"] {
        run_ok(&["forward", "--config", s(&data("demo_forward.cfg")), "--mode", mode, "--out", s(&a)]);
        let out = Command::new(env!("CARGO_BIN_EXE_mellin-radon"))
            .args(["forward", "--config", s(&data("demo_forward.cfg")), "--mode", mode, "--out", s(&b)])
            .env("MELLIN_RADON_THREADS", "3")
            .output()
            .unwrap();
        assert!(out.status.success());
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{mode}");
        let strip = |p: &Path| {
            let mut v = json(&mellin_radon::cli::sidecar(p));
            v.as_object_mut().unwrap().remove("timings");
            v
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(strip(&a)["mode"], mode);
    }
}

#[test]
fn forward_of_zero_density_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let grid = mellin_radon::mellin_engine::LogGrid::cube(2, -10.0, 4.0, 128).unwrap();
    std::fs::write(dir.path().join("zero.csv"), GridFunction::zeros(grid).to_csv_string()).unwrap();
    let cfg = dir.path().join("zero.cfg");
    std::fs::write(
        &cfg,
        "[cost]\n(ces :alpha 0.5 :C 1 :a (0.5 0.5) (axis 1) (axis 2))\n\
         [grid]\nlower = -10\nupper = 4\npoints = 128\n[density]\npath = zero.csv\n",
    )
    .unwrap();
    let out = dir.path().join("g.csv");
    for mode in ["radon", "profit"] {
        run_ok(&["forward", "--config", s(&cfg), "--mode", mode, "--out", s(&out)]);
        assert!(read_grid(&out).values().iter().all(|v| *v == 0.0), "{mode}");
    }
}

/// Golden file for the demo scene. It is written only after the grid values
/// agree with the independent level-curve scheme at interior prices.
#[test]
fn forward_demo_scene_matches_golden() {
    let golden = data("demo_forward_radon.csv");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    run_ok(&["forward", "--config", s(&data("demo_forward.cfg")), "--out", s(&out)]);
    let g = read_grid(&out);

    let q = CostExpr::parse("(ces :alpha 1 :C 1 :a (0.5 0.5) (axis 1) (axis 2))").unwrap();
    let f = GridFunction::from_fn(mellin_radon::mellin_engine::LogGrid::cube(2, -10.0, 4.0, 512).unwrap(), |x| {
        (-x[0] - x[1]).exp()
    })
    .unwrap();
    let opts = RadonOptions::scheme(RadonScheme::LevelCurve);
    let (mut gate, mut point) = (0.0f64, vec![0.0; 2]);
    for (i, j) in [(54, 54), (64, 74), (74, 60), (80, 80), (60, 86), (70, 70)] {
        let flat = g.grid().ravel(&[i, j]);
        g.grid().point(flat, &mut point);
        let reference = radon_forward(&f, &q, &point, &opts).unwrap();
        gate = gate.max((g.values()[flat] - reference).abs() / reference.abs());
    }
    assert!(gate <= 1e-3, "dual-scheme agreement gate: {gate:e}");

    if !golden.exists() {
        std::fs::copy(&out, &golden).unwrap();
    }
    let want = read_grid(&golden);
    assert_eq!(want.grid(), g.grid());
    let scale = want.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = g
        .values()
        .iter()
        .zip(want.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(worst <= 1e-12 * scale, "golden deviation {worst:e} at scale {scale:e}");
}

#[test]
fn invert_roundtrip_reports_interior_error() {
    let dir = tempfile::tempdir().unwrap();
    let (g, f) = (dir.path().join("g.csv"), dir.path().join("f.csv"));
    let cfg = data("gamma_roundtrip.cfg");
    run_ok(&["forward", "--config", s(&cfg), "--out", s(&g)]);
    run_ok(&["invert", "--config", s(&cfg), "--data", s(&g), "--out", s(&f)]);
    let report = json(&mellin_radon::cli::sidecar(&f));
    let err = report["interior_l2_error"].as_f64().unwrap();
    assert!(err <= Tolerances::builtin().inversion.radon, "interior error {err:e}");
    assert_eq!(report["epsilon"], 1e-6);
    assert!(report["min_abs_k"].as_f64().unwrap() > 0.0);
    assert_eq!(read_grid(&f).grid(), &mellin_radon::mellin_engine::LogGrid::cube(2, -12.0, 16.0, 256).unwrap());
}

#[test]
fn invert_zero_data_gives_zero_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let grid = mellin_radon::mellin_engine::LogGrid::cube(2, -16.0, 12.0, 64).unwrap();
    let g = dir.path().join("g.csv");
    std::fs::write(&g, GridFunction::zeros(grid).to_csv_string()).unwrap();
    let cfg = dir.path().join("z.cfg");
    std::fs::write(&cfg, "[cost]\n(ces :alpha 0.5 :C 1 :a (0.5 0.5) (axis 1) (axis 2))\n[plane]\nc = 0.9\n").unwrap();
    let f = dir.path().join("f.csv");
    for mode in ["radon", "profit"] {
        run_ok(&["invert", "--config", s(&cfg), "--mode", mode, "--data", s(&g), "--out", s(&f)]);
        assert!(read_grid(&f).values().iter().all(|v| *v == 0.0), "{mode}");
        assert!(json(&mellin_radon::cli::sidecar(&f))["interior_l2_error"].is_null());
    }
}

#[test]
fn invert_with_zero_bearing_kernel_flags_band() {
    let dir = tempfile::tempdir().unwrap();
    let (g, f) = (dir.path().join("g.csv"), dir.path().join("f.csv"));
    let cfg = data("two_exponential.cfg");
    run_ok(&["forward", "--config", s(&cfg), "--mode", "kernel", "--out", s(&g)]);
    run_ok(&["invert", "--config", s(&cfg), "--mode", "kernel", "--data", s(&g), "--out", s(&f)]);
    let report = json(&mellin_radon::cli::sidecar(&f));
    let bands = report["flagged_zero_bands"].as_array().unwrap();
    assert!(!bands.is_empty(), "{report}");
    assert!(
        bands.iter().any(|b| b["lower"].as_f64().unwrap() <= 0.0 && 0.0 <= b["upper"].as_f64().unwrap()),
        "{report}"
    );
}

fn diagnose(cfg: &Path, mode: &str) -> Value {
    serde_json::from_slice(&run_ok(&["diagnose", "--config", s(cfg), "--mode", mode]).stdout).unwrap()
}

#[test]
fn diagnose_nested_ces_is_certified_and_profit_mirrors_radon() {
    let radon = diagnose(&data("nested3.cfg"), "radon");
    assert_eq!(radon["verdict"], "injective-certified");
    assert_eq!(radon["r"], "2");
    let profit = diagnose(&data("nested3.cfg"), "profit");
    assert_eq!(profit["verdict"], radon["verdict"]);
    assert_eq!(profit["operator"], "Pi_q");
}

#[test]
fn diagnose_two_exponential_kernel_is_not_injective() {
    let v = diagnose(&data("two_exponential.cfg"), "kernel");
    assert_eq!(v["verdict"], "not-injective-numerical");
    assert_eq!(v["kernel_scan"]["classification"], "isolated-zeros");
}

#[test]
fn diagnose_writes_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("h.cfg");
    std::fs::write(
        &cfg,
        "[cost]\n(ces :alpha 0.5 :C 1 :a (0.5 0.5) (axis 1) (axis 2))\n[diagnose]\nresolution = 16\nheatmap = map.csv\n",
    )
    .unwrap();
    run_ok(&["diagnose", "--config", s(&cfg)]);
    let text = std::fs::read_to_string(dir.path().join("map.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("xi1,xi2,modulus"));
    assert_eq!(text.lines().count(), 1 + 256);
}

#[test]
fn selftest_names_projection_identity_under_gamma_fault() {
    let out = run(&["selftest", "--level", "quick", "--inject-gamma-fault"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("selftest failed: Gamma(s) M[R_q f](z)"), "{err}");
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.lines().next().unwrap().starts_with("identity"));
}
