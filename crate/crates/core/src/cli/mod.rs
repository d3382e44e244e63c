//! Command bodies behind the `mellin-radon` binary.
//!
//! Every command is a pure function of the parsed config and input files,
//! so outputs are bit-identical across runs. Wall-clock timings live only in
//! the `timings` object of the metadata.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::cost_model::{validate_cost, ValidationReport};
use crate::diagnostics::{injectivity_report, modulus_heatmap_csv, InjectivityReport};
use crate::error::{Error, Result};
use crate::inversion::{invert_kernel, invert_profit, invert_radon, Inversion};
use crate::mellin_engine::{GridFunction, LogGrid};
use crate::selftest::{CriterionResult, Level, Tolerances};
use crate::transforms::{default_p_grid, Operator};

pub use config::{DensitySource, KernelChoice, SceneConfig};

/// Samples drawn by `validate`.
pub const VALIDATION_SAMPLES: usize = 256;
/// Relative homogeneity residual accepted by `validate`.
pub const HOMOGENEITY_TOL: f64 = 1e-10;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit status for an error: bad input is a validation failure, a failed
/// numerical guarantee is a numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Domain(_)
        | Error::Shape(_)
        | Error::Parse { .. }
        | Error::Structure(_)
        | Error::Argument(_)
        | Error::Format(_) => EXIT_VALIDATION,
        Error::Pole(_)
        | Error::NonConvergence(_)
        | Error::Coverage(_)
        | Error::Resolution(_)
        | Error::DivisionInstability { .. }
        | Error::Integrability(_)
        | Error::DegenerateProduction => EXIT_NUMERICAL,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Radon,
    Kernel,
    Profit,
}

impl Mode {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "radon" => Ok(Mode::Radon),
            "kernel" => Ok(Mode::Kernel),
            "profit" => Ok(Mode::Profit),
            other => Err(Error::Argument(format!("mode must be radon, kernel or profit, got {other:?}"))),
        }
    }

    pub fn operator(self, cfg: &SceneConfig) -> Result<Operator> {
        Ok(match self {
            Mode::Radon => Operator::Radon,
            Mode::Profit => Operator::Profit { p0: cfg.p0 },
            Mode::Kernel => Operator::Kernel { kernel: cfg.kernel_spec()? },
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidateSummary {
    pub cost_digest: String,
    pub dim: usize,
    pub depth: usize,
    pub homogeneity_tolerance: f64,
    pub validation: ValidationReport,
    pub passed: bool,
}

pub fn cmd_validate(cfg: &SceneConfig) -> ValidateSummary {
    let validation = validate_cost(&cfg.cost, VALIDATION_SAMPLES);
    ValidateSummary {
        cost_digest: cfg.cost.digest(),
        dim: cfg.dim(),
        depth: cfg.cost.depth(),
        homogeneity_tolerance: HOMOGENEITY_TOL,
        passed: validation.passed(HOMOGENEITY_TOL),
        validation,
    }
}

/// `y0 dy len` of each axis.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct AxisMeta {
    pub y0: f64,
    pub dy: f64,
    pub len: usize,
}

fn axes_meta(g: &LogGrid) -> Vec<AxisMeta> {
    g.axes()
        .iter()
        .map(|a| AxisMeta {
            y0: a.y0,
            dy: a.dy,
            len: a.len,
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ForwardMeta {
    pub mode: Mode,
    pub operator: &'static str,
    pub cost_digest: String,
    pub density: DensitySource,
    pub f_grid: Vec<AxisMeta>,
    pub p_grid: Vec<AxisMeta>,
    pub timings: Timings,
}

/// Samples of the chosen operator on the mirrored p-grid.
pub fn cmd_forward(cfg: &SceneConfig, mode: Mode) -> Result<(GridFunction, ForwardMeta)> {
    let grid = cfg.require_grid()?;
    let density = cfg.require_density()?;
    let op = mode.operator(cfg)?;
    let f = density.load(grid)?;
    let start = Instant::now();
    let g = op.apply_grid(&f, &cfg.cost)?;
    let meta = ForwardMeta {
        mode,
        operator: op.label(),
        cost_digest: cfg.cost.digest(),
        density: density.clone(),
        f_grid: axes_meta(grid),
        p_grid: axes_meta(&default_p_grid(grid)),
        timings: Timings {
            seconds: start.elapsed().as_secs_f64(),
        },
    };
    Ok((g, meta))
}

/// Inverts `data`; the error against the configured density is reported
/// when the config has one.
pub fn cmd_invert(cfg: &SceneConfig, mode: Mode, data: &GridFunction) -> Result<Inversion> {
    if data.dim() != cfg.dim() {
        return Err(Error::Shape(format!(
            "data has {} coordinates but the cost has {}",
            data.dim(),
            cfg.dim()
        )));
    }
    if let Some(grid) = &cfg.grid {
        if *data.grid() != default_p_grid(grid) {
            return Err(Error::Shape("data grid is not the p-grid of the configured grid".into()));
        }
    }
    let opts = &cfg.inversion;
    let inv = match mode {
        Mode::Radon => invert_radon(data, &cfg.cost, opts)?,
        Mode::Profit => invert_profit(data, cfg.p0, &cfg.cost, opts)?,
        Mode::Kernel => invert_kernel(data, &cfg.cost, &cfg.kernel_spec()?, opts)?,
    };
    match &cfg.density {
        Some(d) => {
            let truth = d.load(inv.estimate.grid())?;
            inv.with_truth(&truth)
        }
        None => Ok(inv),
    }
}

/// Injectivity report and, when the config names a heatmap file, the CSV
/// of `|Me^{-q}|` on the scan lattice.
pub fn cmd_diagnose(cfg: &SceneConfig, mode: Mode) -> Result<(InjectivityReport, Option<String>)> {
    let op = mode.operator(cfg)?;
    let report = injectivity_report(&op, &cfg.cost, &cfg.c, cfg.r, &cfg.scan)?;
    let heatmap = match cfg.heatmap {
        Some(_) => Some(modulus_heatmap_csv(&cfg.cost, &cfg.c, cfg.scan.radius, cfg.scan.resolution)?),
        None => None,
    };
    Ok((report, heatmap))
}

pub fn cmd_selftest(level: Level) -> Vec<CriterionResult> {
    crate::selftest::run(level, &Tolerances::builtin())
}

/// Every failing identity, or the error of a criterion that could not run.
pub fn selftest_failures(results: &[CriterionResult]) -> Vec<String> {
    let mut out = Vec::new();
    for r in results {
        if let Some(e) = &r.error {
            out.push(format!("criterion {} ({}): {e}", r.number, r.title));
        }
        out.extend(r.rows.iter().filter(|row| !row.passed).map(|row| row.identity.clone()));
    }
    out
}

/// Plain-text table: one line per compared identity.
pub fn selftest_table(results: &[CriterionResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<72} {:>12} {:>12}  status", "identity", "residual", "tolerance");
    for r in results {
        let _ = writeln!(s, "# criterion {}: {} ({:.1} s)", r.number, r.title, r.seconds);
        if let Some(e) = &r.error {
            let _ = writeln!(s, "{:<72} {:>12} {:>12}  FAIL  {e}", r.title, "-", "-");
        }
        for row in &r.rows {
            let status = if row.passed { "ok" } else { "FAIL" };
            let _ = writeln!(
                s,
                "{:<72} {:>12.3e} {:>12.3e}  {status}",
                row.identity, row.residual, row.tolerance
            );
        }
    }
    s
}

/// `path.json` next to `path`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}
