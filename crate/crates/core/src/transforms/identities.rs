//! Numerical checks of the identities linking `R_q`, `R^h_q`, `Pi_q` and the
//! Mellin transform. Every check computes both sides by independent routes.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::density::{Density, FnDensity};
use super::kernel_transform::{gauss_legendre, profit_forward, q_range, rhq_grid, KernelOptions, KernelScheme};
use super::norms::{weighted_norm, NormOrder, WeightedNormSpec};
use super::radon::{default_p_grid, radon_grid, radon_simplex};
use crate::cost_model::CostExpr;
use crate::error::{Error, Result};
use crate::mellin_engine::{
    gamma, gamma_real, mellin_expcost_closed, mellin_forward, mellin_quadrature, ForwardOptions, GridFunction,
    KernelSpec, QuadratureBox,
};

/// Forward operator named by an identity or a report.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "operator", rename_all = "kebab-case")]
pub enum Operator {
    Radon,
    Kernel { kernel: KernelSpec },
    Profit { p0: f64 },
}

impl Operator {
    pub fn label(&self) -> &'static str {
        match self {
            Operator::Radon => "R_q",
            Operator::Kernel { .. } => "R^h_q",
            Operator::Profit { .. } => "Pi_q",
        }
    }

    /// Samples of the operator applied to `f` on the mirrored p-grid.
    pub fn apply_grid(&self, f: &GridFunction, q: &CostExpr) -> Result<GridFunction> {
        let pg = default_p_grid(f.grid());
        match self {
            Operator::Radon => radon_grid(f, q, &pg),
            Operator::Kernel { kernel } => rhq_grid(f, q, kernel, &pg),
            Operator::Profit { p0 } => rhq_grid(f, q, &KernelSpec::Profit { p0: *p0 }, &pg),
        }
    }

    /// `(Mh)(s)`; identically one for `R_q`.
    pub fn kernel_mellin(&self, s: Complex64) -> Result<Complex64> {
        match self {
            Operator::Radon => Ok(Complex64::new(1.0, 0.0)),
            Operator::Kernel { kernel } => kernel.mellin(s),
            Operator::Profit { p0 } => KernelSpec::Profit { p0: *p0 }.mellin(s),
        }
    }
}

/// `|int f dx - int t^{-1} (R_q f)(p/t) dt| / |int f dx|`, absolute when `f = 0`.
///
/// `t` runs over `[q_p(e^lo), q_p(e^hi)]` of the grid box with `t_nodes`
/// Gauss-Legendre nodes in `ln t`.
pub fn coarea_check(f: &GridFunction, q: &CostExpr, p: &[f64], t_nodes: usize) -> Result<f64> {
    let (lo, hi) = f.log_box();
    let (tmin, tmax) = q_range(q, p, &lo, &hi);
    coarea_check_on(f, q, p, (tmin, tmax), t_nodes)
}

/// [`coarea_check`] over an explicit `t` range, which must cover every
/// `q_p`-value met where `f != 0`.
pub fn coarea_check_on(f: &GridFunction, q: &CostExpr, p: &[f64], t: (f64, f64), t_nodes: usize) -> Result<f64> {
    let grid = f.grid();
    let n = grid.dim();
    let mut y = vec![0.0; n];
    let mut x = vec![0.0; n];
    let (mut lo_q, mut hi_q) = (f64::INFINITY, 0.0f64);
    let mut total = 0.0;
    for (k, v) in f.values().iter().enumerate() {
        if *v == 0.0 {
            continue;
        }
        grid.point(k, &mut x);
        grid.log_point(k, &mut y);
        let qv = q.scaled_value(p, &x);
        lo_q = lo_q.min(qv);
        hi_q = hi_q.max(qv);
        total += v * y.iter().sum::<f64>().exp();
    }
    total *= grid.cell_volume();
    if lo_q > hi_q {
        return Ok(0.0);
    }
    let slack = 1e-9;
    if t.0 > lo_q * (1.0 + slack) || t.1 < hi_q * (1.0 - slack) {
        return Err(Error::Coverage(format!(
            "t-range [{:.3e}, {:.3e}] misses q_p-values [{lo_q:.3e}, {hi_q:.3e}] of the support",
            t.0, t.1
        )));
    }
    let (lo, hi) = f.log_box();
    let (tmin, tmax) = q_range(q, p, &lo, &hi);
    let a = t.0.max(tmin).ln() + 1e-12;
    let b = t.1.min(tmax).ln() - 1e-12;
    let step = grid.axes().iter().map(|ax| ax.dy).fold(f64::INFINITY, f64::min) / 4.0;
    let failure = std::sync::Mutex::new(None);
    let reduced = gauss_legendre(a, b, t_nodes.div_ceil(4).max(1), |tau| {
        let pt: Vec<f64> = p.iter().map(|v| v * (-tau).exp()).collect();
        radon_simplex(f, q, &pt, step).unwrap_or_else(|e| {
            failure.lock().expect("poisoned").get_or_insert(e);
            0.0
        })
    });
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    let diff = (total - reduced).abs();
    Ok(if total == 0.0 { diff } else { diff / total.abs() })
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

/// `Gamma(s) int p^{z - I} h(q_p(x)) dp` against `x^{-z} (Me^{-q})(z) (Mh)(s)`.
///
/// The left side is tensor quadrature over `p`; `points` nodes per axis.
pub fn factorization_check(
    q: &CostExpr,
    h: &KernelSpec,
    x: &[f64],
    z: &[Complex64],
    points: usize,
) -> Result<FactorizationReport> {
    let n = q.dim();
    if x.len() != n || z.len() != n {
        return Err(Error::Shape("x and z must match the cost dimension".into()));
    }
    h.validate()?;
    let s: Complex64 = z.iter().sum();
    let re_min = z.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    // Weights e^{Re z.y} fall below 1e-17 at the lower faces.
    let lower: Vec<f64> = x.iter().map(|xi| -40.0 / re_min - xi.ln()).collect();
    // Where q_p(x) exceeds max(20, support end) every kernel here is negligible.
    let reach = h.support_end().clamp(1.0, 40.0).ln() + 3.5;
    let upper: Vec<f64> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let qi = q.value(&e.iter().map(|v| if *v > 0.0 { 1.0 } else { 1e-300 }).collect::<Vec<_>>());
            reach - qi.ln() - x[i].ln()
        })
        .collect();
    let qbox = QuadratureBox {
        lower,
        upper,
        points: vec![points; n],
        face_tolerance: 1e-7,
    };
    let integral = mellin_quadrature(|p| h.eval(q.scaled_value(p, x)), z, &qbox)?;
    let lhs = gamma(s)? * integral;
    let x_pow: Complex64 = x.iter().zip(z).map(|(xi, zi)| (-zi * xi.ln()).exp()).product();
    let rhs = x_pow * mellin_expcost_closed(q, z)? * h.mellin(s)?;
    let residual = (lhs - rhs).norm() / rhs.norm();
    Ok(FactorizationReport { lhs, rhs, residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityPoint {
    pub xi: Vec<f64>,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub operator: &'static str,
    pub c: Vec<f64>,
    pub points: Vec<IdentityPoint>,
    pub max_residual: f64,
}

/// Deterministic pick of `count` lattice bins with `|xi_i| <= max_xi`, origin first.
pub fn pick_frequencies(lens: &[usize], steps: &[f64], count: usize, max_xi: f64, seed: u64) -> Vec<Vec<i64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach: Vec<i64> = steps
        .iter()
        .zip(lens)
        .map(|(s, n)| ((max_xi / s).floor() as i64).min(*n as i64 / 2 - 1).max(0))
        .collect();
    let mut out = vec![vec![0i64; lens.len()]];
    let mut guard = 0;
    while out.len() < count && guard < 100 * count {
        guard += 1;
        let m: Vec<i64> = reach.iter().map(|r| rng.gen_range(-r..=*r)).collect();
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

/// `count` seeded frequency vectors uniform in the ball `|xi| <= radius`.
pub fn ball_frequencies(dim: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() <= radius * radius {
            out.push(v);
        }
    }
    out
}

/// `Gamma(s) (M T f)(z) = (Mf)(I - z) (Me^{-q})(z) (Mh)(s)` on `Re z = c`.
///
/// `T f` is sampled on the mirrored p-grid; `Mf` comes from the FFT of `f`
/// on `Re w = I - c`, `Me^{-q}` from the closed form. Needs `0 < c_i < 1`.
pub fn projection_check(
    f: &GridFunction,
    q: &CostExpr,
    op: &Operator,
    c: &[f64],
    count: usize,
    max_xi: f64,
) -> Result<IdentityReport> {
    let n = q.dim();
    if c.len() != n || f.dim() != n {
        return Err(Error::Shape("plane, density and cost dimensions differ".into()));
    }
    let dual: Vec<f64> = c.iter().map(|v| 1.0 - v).collect();
    let g = op.apply_grid(f, q)?;
    let mg = mellin_forward(&g, c, ForwardOptions::default())?;
    let mf = mellin_forward(f, &dual, ForwardOptions::default())?;
    let lens: Vec<usize> = mg.axes.iter().map(|a| a.len).collect();
    let steps: Vec<f64> = mg.axes.iter().map(|a| a.step()).collect();
    let bins = pick_frequencies(&lens, &steps, count, max_xi, 0x5eed);
    let strides: Vec<usize> = (0..n).map(|i| lens[i + 1..].iter().product()).collect();
    let flat = |m: &[i64]| -> usize {
        m.iter()
            .zip(&lens)
            .zip(&strides)
            .map(|((mi, len), st)| mi.rem_euclid(*len as i64) as usize * st)
            .sum()
    };
    let mut points = Vec::with_capacity(bins.len());
    for m in &bins {
        let neg: Vec<i64> = m.iter().map(|v| -v).collect();
        let xi: Vec<f64> = m.iter().zip(&steps).map(|(mi, s)| *mi as f64 * s).collect();
        let z: Vec<Complex64> = c.iter().zip(&xi).map(|(ci, x)| Complex64::new(*ci, *x)).collect();
        let s: Complex64 = z.iter().sum();
        let lhs = gamma(s)? * mg.values[flat(m)];
        let rhs = mf.values[flat(&neg)] * mellin_expcost_closed(q, &z)? * op.kernel_mellin(s)?;
        let residual = (lhs - rhs).norm() / rhs.norm();
        points.push(IdentityPoint { xi, lhs, rhs, residual });
    }
    let max_residual = points.iter().map(|p| p.residual).fold(0.0, f64::max);
    Ok(IdentityReport {
        operator: op.label(),
        c: c.to_vec(),
        points,
        max_residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityLine {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub r: NormOrder,
    pub c: Vec<f64>,
    pub lines: Vec<InequalityLine>,
}

impl InequalityReport {
    /// Smallest slack relative to its right side.
    pub fn min_relative_slack(&self) -> f64 {
        self.lines
            .iter()
            .map(|l| if l.rhs > 0.0 { l.slack / l.rhs } else { l.slack })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Operator-norm estimates in `L^r_c` for `R_q`, `R^h_q` (when `h` is given)
/// and `Pi_q(p0, .)`, with norms on the mirrored p-grid.
pub fn prop1_check(
    f: &GridFunction,
    q: &CostExpr,
    h: Option<&KernelSpec>,
    p0: f64,
    r: NormOrder,
    c: &[f64],
) -> Result<InequalityReport> {
    Ok(prop1_check_orders(f, q, h, p0, &[r], c)?.remove(0))
}

/// [`prop1_check`] for several orders, applying each operator once.
pub fn prop1_check_orders(
    f: &GridFunction,
    q: &CostExpr,
    h: Option<&KernelSpec>,
    p0: f64,
    orders: &[NormOrder],
    c: &[f64],
) -> Result<Vec<InequalityReport>> {
    let alpha: f64 = c.iter().sum();
    let cz: Vec<Complex64> = c.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let k = mellin_expcost_closed(q, &cz)?.re / gamma_real(alpha)?;
    let mut images = vec![("R_q", Operator::Radon.apply_grid(f, q)?, 1.0)];
    if let Some(h) = h {
        let g = Operator::Kernel { kernel: h.clone() }.apply_grid(f, q)?;
        images.push(("R^h_q", g, h.weighted_l1(alpha)?));
    }
    let pi_factor = p0.powf(alpha + 1.0) * gamma_real(alpha)? / gamma_real(alpha + 2.0)?;
    images.push(("Pi_q", Operator::Profit { p0 }.apply_grid(f, q)?, pi_factor));
    orders
        .iter()
        .map(|r| {
            let spec = WeightedNormSpec::new(*r, c.to_vec())?;
            let base = k * weighted_norm(f, &spec.dual()?)?;
            let lines = images
                .iter()
                .map(|(name, g, factor)| {
                    let lhs = weighted_norm(g, &spec)?;
                    let rhs = base * factor;
                    Ok(InequalityLine {
                        name,
                        lhs,
                        rhs,
                        slack: rhs - lhs,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(InequalityReport {
                r: *r,
                c: c.to_vec(),
                lines,
            })
        })
        .collect()
}

/// Extremal case of the `R_q` estimate for `r = inf`: `f = x^{c - I}`.
///
/// Returns `((R_q f)(I), (Me^{-q})(c) / Gamma(alpha))`; both sides of the
/// estimate reduce to these since `R_q f (p) p^c` is constant.
pub fn prop1_extremal(q: &CostExpr, c: &[f64], step: f64) -> Result<(f64, f64)> {
    let n = q.dim();
    if c.len() != n {
        return Err(Error::Shape("plane and cost dimensions differ".into()));
    }
    WeightedNormSpec::new(NormOrder::Infinity, c.to_vec())?;
    let c_owned = c.to_vec();
    let f = FnDensity::new(
        move |x: &[f64]| x.iter().zip(&c_owned).map(|(xi, ci)| xi.powf(ci - 1.0)).product(),
        vec![-80.0; n],
        vec![12.0; n],
    )?;
    let lhs = radon_simplex(&f, q, &vec![1.0; n], step)?;
    let cz: Vec<Complex64> = c.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    let rhs = mellin_expcost_closed(q, &cz)?.re / gamma_real(c.iter().sum())?;
    Ok((lhs, rhs))
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondDerivativeReport {
    pub p0: f64,
    pub finite_difference: f64,
    pub radon: f64,
    pub residual: f64,
}

/// Central second difference of `p0 -> Pi_q f(p0, p)` against
/// `p0^{-1} (R_q f)(p / p0)`; `Pi_q` by the coarea reduction with `t_nodes`
/// Gauss-Legendre nodes.
pub fn profit_second_derivative_check(
    f: &GridFunction,
    q: &CostExpr,
    p: &[f64],
    p0: f64,
    step: f64,
    t_nodes: usize,
) -> Result<SecondDerivativeReport> {
    let opts = KernelOptions {
        t_nodes,
        ..KernelOptions::scheme(KernelScheme::Coarea)
    };
    let pi = |t: f64| profit_forward(f, q, t, p, &opts);
    let fd = (pi(p0 + step)? - 2.0 * pi(p0)? + pi(p0 - step)?) / (step * step);
    let dv = f.grid().axes().iter().map(|a| a.dy).fold(f64::INFINITY, f64::min) / 4.0;
    let pp: Vec<f64> = p.iter().map(|v| v / p0).collect();
    let radon = radon_simplex(f, q, &pp, dv)? / p0;
    Ok(SecondDerivativeReport {
        p0,
        finite_difference: fd,
        radon,
        residual: (fd - radon).abs() / radon.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mellin_engine::LogGrid;

    fn linear() -> CostExpr {
        CostExpr::flat_ces(1.0, 1.0, vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn coarea_linear_scene() {
        let grid = LogGrid::cube(2, -10.0, 4.0, 256).unwrap();
        let f = GridFunction::from_fn(grid, |x| (-x[0] - x[1]).exp()).unwrap();
        let res = coarea_check(&f, &linear(), &[1.0, 1.0], 512).unwrap();
        assert!(res < 1e-3, "{res}");
    }

    #[test]
    fn coarea_zero_density() {
        let f = GridFunction::zeros(LogGrid::cube(2, -2.0, 2.0, 16).unwrap());
        assert_eq!(coarea_check(&f, &linear(), &[1.0, 1.0], 64).unwrap(), 0.0);
    }

    #[test]
    fn coarea_short_range_is_a_coverage_error() {
        let grid = LogGrid::cube(2, -4.0, 2.0, 64).unwrap();
        let f = GridFunction::from_fn(grid, |x| (-x[0] - x[1]).exp()).unwrap();
        let err = coarea_check_on(&f, &linear(), &[1.0, 1.0], (0.5, 2.0), 64).unwrap_err();
        assert!(matches!(err, Error::Coverage(_)));
    }

    #[test]
    fn factorization_exponential_cancels() {
        let z = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let rep = factorization_check(&linear(), &KernelSpec::Exponential, &[1.0, 1.0], &z, 800).unwrap();
        // Gamma(s) (Mh)(s)^{-1} cancels: both sides equal (Me^{-q})(z) = 4.
        assert!((rep.rhs.re - 4.0).abs() < 1e-12);
        assert!(rep.residual < 1e-6, "{rep:?}");
    }

    #[test]
    fn factorization_profit_and_scaling() {
        let z = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let h = KernelSpec::Profit { p0: 1.0 };
        let at_unit = factorization_check(&linear(), &h, &[1.0, 1.0], &z, 1200).unwrap();
        assert!(at_unit.residual < 1e-3, "{at_unit:?}");
        let at_two = factorization_check(&linear(), &h, &[2.0, 2.0], &z, 1200).unwrap();
        assert!(at_two.residual < 1e-3, "{at_two:?}");
        // x^{-z} = 2^{-2}.
        assert!((at_two.lhs / at_unit.lhs - 0.25).norm() < 1e-3);
    }

    #[test]
    fn extremal_power_function_meets_equality() {
        let q = CostExpr::flat_ces(0.5, 1.0, vec![0.4, 0.6]).unwrap();
        let (lhs, rhs) = prop1_extremal(&q, &[0.7, 1.2], 0.01).unwrap();
        assert!((lhs - rhs).abs() < 1e-6 * rhs, "{lhs} {rhs}");
        let (lhs, rhs) = prop1_extremal(&linear(), &[1.0, 1.0], 0.01).unwrap();
        assert!((lhs - 4.0).abs() < 1e-6 && (rhs - 4.0).abs() < 1e-12, "{lhs} {rhs}");
    }

    #[test]
    fn projection_identities_on_gamma_scene() {
        let grid = LogGrid::cube(2, -12.0, 16.0, 256).unwrap();
        let f = GridFunction::from_fn(grid, |x| x[0] * x[0] * x[1] * x[1] * (-x[0] - x[1]).exp()).unwrap();
        let q = linear();
        for (op, c) in [
            (Operator::Radon, [0.9, 0.9]),
            (Operator::Profit { p0: 1.0 }, [0.9, 0.9]),
            (Operator::Kernel { kernel: KernelSpec::Exponential }, [0.9, 0.9]),
        ] {
            let rep = projection_check(&f, &q, &op, &c, 20, 3.0).unwrap();
            assert!(rep.max_residual < 1e-3, "{}: {:e}", rep.operator, rep.max_residual);
        }
    }

    #[test]
    fn frequency_pick_is_deterministic_and_bounded() {
        let a = pick_frequencies(&[64, 64], &[0.25, 0.25], 20, 3.0, 1);
        assert_eq!(a, pick_frequencies(&[64, 64], &[0.25, 0.25], 20, 3.0, 1));
        assert_eq!(a.len(), 20);
        assert!(a.iter().flatten().all(|m| m.abs() <= 12));
    }
}
