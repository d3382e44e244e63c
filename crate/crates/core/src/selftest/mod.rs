//! Acceptance suite: identity residuals, analytic values, inversion roundtrips
//! and diagnostics verdicts, each compared against the shared tolerance table.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost_model::CostExpr;
use crate::diagnostics::{injectivity_report, kernel_zero_scan, ScanSettings, Verdict};
use crate::error::{Error, Result};
use crate::inversion::{invert_profit, invert_radon, InversionOptions, DEFAULT_EPSILON};
use crate::mellin_engine::{
    mellin_expcost_closed, mellin_quadrature_many, GridFunction, KernelSpec, LogGrid, QuadratureBox,
};
use crate::transforms::{
    ball_frequencies, coarea_check, factorization_check, profit_grid, profit_second_derivative_check,
    projection_check, prop1_check_orders, prop1_extremal, radon_forward, radon_grid, NormOrder, Operator, RadonOptions,
    RadonScheme, Synthetic,
};

const TOLERANCES: &str = include_str!("../../tolerances.toml");
const CES_ORACLE: &str = include_str!("../../data/ces_mellin_oracle.csv");

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ClosedFormTol {
    pub flat: f64,
    pub nested: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ProjectionTol {
    pub radon: f64,
    pub profit: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ResidualTol {
    pub residual: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct NormEstimateTol {
    pub min_relative_slack: f64,
    pub extremal: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct InversionTol {
    pub radon: f64,
    pub profit: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct AnalyticTol {
    pub radon_at_unit: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct RuntimeTol {
    pub quick_seconds: f64,
    pub full_seconds: f64,
    pub inversion_seconds: f64,
    pub identity_seconds: f64,
}

/// Machine-readable tolerance table, `tolerances.toml` in the crate root.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Tolerances {
    pub closed_form: ClosedFormTol,
    pub projection: ProjectionTol,
    pub profit_second_derivative: ResidualTol,
    pub coarea: ResidualTol,
    pub factorization: ResidualTol,
    pub norm_estimates: NormEstimateTol,
    pub inversion: InversionTol,
    pub analytic: AnalyticTol,
    pub runtime: RuntimeTol,
}

impl Tolerances {
    /// The table compiled into the crate.
    pub fn builtin() -> Self {
        Self::parse(TOLERANCES).expect("bundled tolerance table parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("tolerance table: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "quick" => Ok(Level::Quick),
            "full" => Ok(Level::Full),
            other => Err(Error::Argument(format!("level must be quick or full, got {other:?}"))),
        }
    }

    pub fn criteria(self) -> &'static [u8] {
        match self {
            Level::Quick => &[1, 2, 3, 4, 5, 7],
            Level::Full => &[1, 2, 3, 4, 5, 6, 7, 8],
        }
    }
}

/// One compared quantity.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRow {
    pub identity: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckRow {
    /// Passes when `residual <= tolerance`; NaN fails.
    pub fn within(identity: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            identity: identity.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }

    /// Boolean outcome; residual 0 on success and 1 on failure.
    pub fn holds(identity: impl Into<String>, ok: bool) -> Self {
        Self {
            identity: identity.into(),
            residual: if ok { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: ok,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub number: u8,
    pub title: &'static str,
    pub rows: Vec<CheckRow>,
    pub seconds: f64,
    /// Set when the criterion could not run to completion.
    pub error: Option<String>,
}

impl CriterionResult {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.rows.is_empty() && self.rows.iter().all(|r| r.passed)
    }

    /// Name of the first failing row, or the error.
    pub fn first_failure(&self) -> Option<String> {
        if let Some(e) = &self.error {
            return Some(e.clone());
        }
        self.rows.iter().find(|r| !r.passed).map(|r| r.identity.clone())
    }
}

pub fn title(number: u8) -> &'static str {
    match number {
        1 => "CES closed form vs quadrature",
        2 => "projection identity for R_q",
        3 => "profit identity and second derivative in p0",
        4 => "coarea and kernel factorization",
        5 => "operator-norm estimates",
        6 => "inversion roundtrip",
        7 => "analytic value of R_q f at I",
        8 => "injectivity diagnostics",
        _ => "unknown criterion",
    }
}

/// Runs criterion `number` (1 to 8); numerical errors become a failed result.
pub fn run_criterion(number: u8, tol: &Tolerances) -> CriterionResult {
    let start = Instant::now();
    let rows = match number {
        1 => closed_form(tol),
        2 => projection_radon(tol),
        3 => profit_identity(tol),
        4 => coarea_and_factorization(tol),
        5 => norm_estimates(tol),
        6 => inversion_roundtrip(tol),
        7 => analytic_value(tol),
        8 => diagnostics(),
        n => Err(Error::Argument(format!("no criterion {n}"))),
    };
    let (mut rows, error) = match rows {
        Ok(r) => (r, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    if matches!(number, 1 | 2) && error.is_none() {
        rows.push(CheckRow::within(
            format!("criterion {number} runtime seconds"),
            start.elapsed().as_secs_f64(),
            tol.runtime.identity_seconds,
        ));
    }
    CriterionResult {
        number,
        title: title(number),
        rows,
        seconds: start.elapsed().as_secs_f64(),
        error,
    }
}

pub fn run(level: Level, tol: &Tolerances) -> Vec<CriterionResult> {
    level.criteria().iter().map(|k| run_criterion(*k, tol)).collect()
}

/// `q = CES(1, 1, (1/2, 1/2))`.
pub fn linear_cost() -> CostExpr {
    CostExpr::flat_ces(1.0, 1.0, vec![0.5, 0.5]).expect("static cost")
}

/// `x1^2 x2^2 e^{-x1-x2}` on `[-12, 16]^2` with 256 nodes per axis.
pub fn gamma_scene() -> Result<GridFunction> {
    let grid = LogGrid::cube(2, -12.0, 16.0, 256)?;
    GridFunction::from_fn(grid, |x| x[0] * x[0] * x[1] * x[1] * (-x[0] - x[1]).exp())
}

/// Plane used on the gamma scene; see the identity checks for why not `I/2`.
pub const SCENE_PLANE: [f64; 2] = [0.9, 0.9];

/// `e^{-x1-x2}` on `[-10, 4]^2` with 256 nodes per axis.
pub fn demo_scene() -> Result<GridFunction> {
    let grid = LogGrid::cube(2, -10.0, 4.0, 256)?;
    GridFunction::from_fn(grid, |x| (-x[0] - x[1]).exp())
}

pub fn nested_cost_3() -> CostExpr {
    CostExpr::parse("(ces :alpha 0.6 :C 1.3 :a (0.4 0.6) (axis 1) (ces :alpha 0.5 :C 0.8 :a (0.3 0.7) (axis 2) (axis 3)))")
        .expect("static cost")
}

pub fn nested_cost_4() -> CostExpr {
    CostExpr::parse(
        "(ces :alpha 0.6 :C 1.3 :a (0.4 0.6) (axis 1) (ces :alpha 0.5 :C 0.8 :a (0.3 0.7) (axis 2) (ces :alpha 0.9 :C 1 :a (0.5 0.5) (axis 3) (axis 4))))",
    )
    .expect("static cost")
}

struct OraclePoint {
    alpha: f64,
    xi: [f64; 2],
    value: Complex64,
}

fn oracle_table() -> Result<Vec<OraclePoint>> {
    CES_ORACLE
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("oracle table: {e}")))?;
            if v.len() != 5 {
                return Err(Error::Format("oracle rows have five columns".into()));
            }
            Ok(OraclePoint {
                alpha: v[0],
                xi: [v[1], v[2]],
                value: Complex64::new(v[3], v[4]),
            })
        })
        .collect()
}

fn plane(c: &[f64], xi: &[f64]) -> Vec<Complex64> {
    c.iter().zip(xi).map(|(a, b)| Complex64::new(*a, *b)).collect()
}

fn closed_form(tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let table = oracle_table()?;
    let mut rows = Vec::new();
    for alpha in [0.25, 0.5, 1.0] {
        let q = CostExpr::flat_ces(alpha, 1.0, vec![0.5, 0.5])?;
        let pts: Vec<&OraclePoint> = table.iter().filter(|p| p.alpha == alpha).collect();
        if pts.len() != 20 {
            return Err(Error::Format(format!("oracle table has {} points for alpha = {alpha}", pts.len())));
        }
        let mut worst: f64 = 0.0;
        let mut live = Vec::new();
        let mass = mellin_expcost_closed(&q, &plane(&[1.0, 1.0], &[0.0, 0.0]))?.re;
        for p in &pts {
            let z = plane(&[1.0, 1.0], &p.xi);
            let k = mellin_expcost_closed(&q, &z)?;
            worst = worst.max((k - p.value).norm() / k.norm());
            if f64::EPSILON * mass / k.norm() < 0.1 * tol.closed_form.flat {
                live.push((z, k));
            }
        }
        rows.push(CheckRow::within(
            format!("closed form vs 160-bit quadrature, alpha = {alpha}, 20 points"),
            worst,
            tol.closed_form.flat,
        ));
        let zs: Vec<Vec<Complex64>> = live.iter().map(|(z, _)| z.clone()).collect();
        let qb = QuadratureBox::cube(2, -45.0, 7.5, 800);
        let vals = mellin_quadrature_many(|x| (-q.value(x)).exp(), &zs, &qb)?;
        let worst_live = live
            .iter()
            .zip(&vals)
            .map(|((_, k), v)| (k - v).norm() / k.norm())
            .fold(0.0, f64::max);
        rows.push(CheckRow::within(
            format!("closed form vs mellin_quadrature, alpha = {alpha}, {} points", live.len()),
            worst_live,
            tol.closed_form.flat,
        ));
    }
    let q = nested_cost_3();
    let zs: Vec<Vec<Complex64>> = ball_frequencies(3, 20, 10.0, 2)
        .iter()
        .map(|xi| plane(&[1.0; 3], xi))
        .collect();
    let qb = QuadratureBox::cube(3, -32.0, 7.5, 200);
    let vals = mellin_quadrature_many(|x| (-q.value(x)).exp(), &zs, &qb)?;
    let mut worst: f64 = 0.0;
    for (z, v) in zs.iter().zip(&vals) {
        let k = mellin_expcost_closed(&q, z)?;
        worst = worst.max((k - v).norm() / k.norm());
    }
    rows.push(CheckRow::within(
        "closed form vs mellin_quadrature, nested depth-2 tree, n = 3, 20 points",
        worst,
        tol.closed_form.nested,
    ));
    Ok(rows)
}

fn projection_radon(tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let f = gamma_scene()?;
    let rep = projection_check(&f, &linear_cost(), &Operator::Radon, &SCENE_PLANE, 20, 3.0)?;
    Ok(vec![CheckRow::within(
        format!("Gamma(s) M[R_q f](z) = Mf(I - z) Me^(-q)(z), {} frequencies", rep.points.len()),
        rep.max_residual,
        tol.projection.radon,
    )])
}

/// Points for the second-derivative check in `p0`.
/// Gauss-Legendre nodes in `ln t` per profit evaluation.
const FD_NODES: usize = 128;
const FD_POINTS: [[f64; 2]; 5] = [[1.0, 1.0], [0.5, 2.0], [2.0, 0.5], [1.5, 1.5], [0.7, 0.9]];

fn profit_identity(tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let f = gamma_scene()?;
    let q = linear_cost();
    let rep = projection_check(&f, &q, &Operator::Profit { p0: 1.0 }, &SCENE_PLANE, 20, 3.0)?;
    let mut rows = vec![CheckRow::within(
        format!("Gamma(s) M[Pi_q f](z) = Mf(I - z) Me^(-q)(z) Mh(s), p0 = 1, {} frequencies", rep.points.len()),
        rep.max_residual,
        tol.projection.profit,
    )];
    let mut worst: f64 = 0.0;
    for p in FD_POINTS {
        let r = profit_second_derivative_check(&f, &q, &p, 1.0, 0.05, FD_NODES)?;
        worst = worst.max(r.residual);
    }
    rows.push(CheckRow::within(
        "d^2 Pi / dp0^2 = p0^(-1) (R_q f)(p / p0), 5 points",
        worst,
        tol.profit_second_derivative.residual,
    ));
    Ok(rows)
}

fn coarea_and_factorization(tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let f = demo_scene()?;
    let q = linear_cost();
    let mut worst: f64 = 0.0;
    for p in [[1.0, 1.0], [0.5, 2.0], [3.0, 1.5]] {
        worst = worst.max(coarea_check(&f, &q, &p, 512)?);
    }
    let mut rows = vec![CheckRow::within("coarea, 3 prices", worst, tol.coarea.residual)];
    let z = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
    let zc = [Complex64::new(0.8, 0.6), Complex64::new(1.1, -0.4)];
    let mut worst: f64 = 0.0;
    for (h, x, z) in [
        (KernelSpec::Profit { p0: 1.0 }, [1.0, 1.0], z),
        (KernelSpec::Profit { p0: 1.0 }, [2.0, 0.5], zc),
        (KernelSpec::Exponential, [1.0, 1.0], zc),
    ] {
        worst = worst.max(factorization_check(&q, &h, &x, &z, 1200)?.residual);
    }
    rows.push(CheckRow::within(
        "kernel factorization, profit and exponential kernels",
        worst,
        tol.factorization.residual,
    ));
    Ok(rows)
}

fn random_scene(rng: &mut ChaCha8Rng) -> Result<(CostExpr, GridFunction, Vec<f64>)> {
    let alpha = rng.gen_range(0.3..=1.0);
    let a = rng.gen_range(0.2..0.8);
    let scale = rng.gen_range(0.5..2.0);
    let q = CostExpr::flat_ces(alpha, scale, vec![a, 1.0 - a])?;
    let shapes = vec![rng.gen_range(1.0..3.0), rng.gen_range(1.0..3.0)];
    let rates = vec![rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)];
    let f = Synthetic::GammaProduct { shapes, rates }.sample(LogGrid::cube(2, -12.0, 12.0, 128)?)?;
    let c = vec![rng.gen_range(0.3..0.8), rng.gen_range(0.3..0.8)];
    Ok((q, f, c))
}

fn norm_estimates(tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ce4e5);
    let mut worst = f64::INFINITY;
    let mut lines = 0;
    for _ in 0..10 {
        let (q, f, c) = random_scene(&mut rng)?;
        for rep in prop1_check_orders(&f, &q, Some(&KernelSpec::Exponential), 1.0, &NormOrder::ALL, &c)? {
            worst = worst.min(rep.min_relative_slack());
            lines += rep.lines.len();
        }
    }
    // `0.0 - x` rather than `-x` keeps a zero tolerance from printing as -0.
    let mut rows = vec![CheckRow::within(
        format!("estimates for R_q, R^h_q, Pi_q: -(min relative slack) over {lines} lines"),
        -worst,
        0.0 - tol.norm_estimates.min_relative_slack,
    )];
    let mut gap: f64 = 0.0;
    for (q, c) in [
        (linear_cost(), vec![0.6, 0.8]),
        (CostExpr::flat_ces(0.5, 1.0, vec![0.4, 0.6])?, vec![0.7, 1.2]),
    ] {
        let (lhs, rhs) = prop1_extremal(&q, &c, 0.01)?;
        gap = gap.max((lhs - rhs).abs() / rhs);
    }
    rows.push(CheckRow::within("extremal case f = x^(c - I) meets equality", gap, tol.norm_estimates.extremal));
    Ok(rows)
}

fn inversion_roundtrip(tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let f = gamma_scene()?;
    let q = linear_cost();
    let pg = f.grid().mirrored();
    let opts = InversionOptions::new(SCENE_PLANE.to_vec(), DEFAULT_EPSILON)?;
    let start = Instant::now();
    let g = radon_grid(&f, &q, &pg)?;
    let radon = invert_radon(&g, &q, &opts)?.with_truth(&f)?;
    let t_radon = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let pi = profit_grid(&f, &q, 1.0, &pg)?;
    let profit = invert_profit(&pi, 1.0, &q, &opts)?.with_truth(&f)?;
    let t_profit = start.elapsed().as_secs_f64();
    let err = |i: &crate::inversion::Inversion| i.report.interior_l2_error.unwrap_or(f64::INFINITY);
    Ok(vec![
        CheckRow::within("invert_radon interior relative L2 error", err(&radon), tol.inversion.radon),
        CheckRow::within("invert_profit interior relative L2 error", err(&profit), tol.inversion.profit),
        CheckRow::within("radon roundtrip seconds", t_radon, tol.runtime.inversion_seconds),
        CheckRow::within("profit roundtrip seconds", t_profit, tol.runtime.inversion_seconds),
    ])
}

fn analytic_value(tol: &Tolerances) -> Result<Vec<CheckRow>> {
    let grid = LogGrid::cube(2, -10.0, 4.0, 512)?;
    let f = GridFunction::from_fn(grid, |x| (-x[0] - x[1]).exp())?;
    let exact = 4.0 * (-2.0f64).exp();
    let q = linear_cost();
    let mut rows = Vec::new();
    for (name, scheme) in [
        ("volume difference", RadonScheme::VolumeDifference),
        ("level curve", RadonScheme::LevelCurve),
        ("simplex", RadonScheme::Simplex),
    ] {
        let v = radon_forward(&f, &q, &[1.0, 1.0], &RadonOptions::scheme(scheme))?;
        rows.push(CheckRow::within(
            format!("(R_q f)(I) = 4 e^-2, {name} scheme"),
            (v - exact).abs() / exact,
            tol.analytic.radon_at_unit,
        ));
    }
    Ok(rows)
}

fn diagnostics() -> Result<Vec<CheckRow>> {
    let settings = ScanSettings {
        resolution: 16,
        ..ScanSettings::default()
    };
    let mut certified = true;
    for (q, c) in [
        (nested_cost_3(), vec![0.5, 0.7, 0.4]),
        (nested_cost_4(), vec![0.5, 0.7, 0.4, 0.6]),
    ] {
        for r in NormOrder::ALL {
            for op in [Operator::Radon, Operator::Profit { p0: 1.0 }] {
                certified &= injectivity_report(&op, &q, &c, r, &settings)?.verdict == Verdict::InjectiveCertified;
            }
        }
    }
    let h = KernelSpec::two_exponential();
    let scan = kernel_zero_scan(&h, 1.0, 10.0, 256)?;
    let spacing = scan.spacing[0];
    let located = scan
        .candidates
        .iter()
        .map(|z| z.lattice_xi[0].abs())
        .fold(f64::INFINITY, f64::min);
    let q = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5])?;
    let rep = injectivity_report(
        &Operator::Kernel { kernel: h },
        &q,
        &[0.5, 0.5],
        NormOrder::Infinity,
        &ScanSettings::default(),
    )?;
    Ok(vec![
        CheckRow::holds("nested CES trees (n = 3, 4): injective-certified for R_q and Pi_q, all r", certified),
        CheckRow::within(
            "two-exponential kernel: lattice distance of the detected zero from s = 1, in spacings",
            located / spacing,
            1.0,
        ),
        CheckRow::holds(
            "two-exponential kernel: R^h_q verdict for r = inf is not-injective-numerical",
            rep.verdict == Verdict::NotInjectiveNumerical,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_parses_and_levels_nest() {
        let t = Tolerances::builtin();
        assert_eq!(t.closed_form.flat, 1e-5);
        for k in Level::Quick.criteria() {
            assert!(Level::Full.criteria().contains(k));
        }
        assert!(Level::parse("medium").is_err());
    }

    #[test]
    fn oracle_table_is_complete() {
        let t = oracle_table().unwrap();
        assert_eq!(t.len(), 60);
        let xi = ball_frequencies(2, 20, 10.0, 1);
        for (p, x) in t.iter().take(20).zip(&xi) {
            assert!((p.xi[0] - x[0]).abs() < 1e-14 && (p.xi[1] - x[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn nan_fails_a_row() {
        assert!(!CheckRow::within("x", f64::NAN, 1.0).passed);
    }
}
