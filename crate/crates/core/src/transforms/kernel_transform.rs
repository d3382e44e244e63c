//! `(R^h_q f)(p) = int h(q_p(x)) f(x) dx` and the profit operator, the case
//! `h(t) = (p0 - t)_+`.
//!
//! The direct scheme sums `h(q_p) f` over the grid and refines cells cut by a
//! kink of `h`. The coarea scheme reduces to
//! `int h(e^tau) (R_q f)(p e^{-tau}) dtau` with Gauss-Legendre panels in `tau`.
//! The batch form applies the same reduction along the diagonal of a p-grid.

use rayon::prelude::*;

use super::density::Density;
use super::radon::{check_point, lattice_offsets, radon_grid, radon_simplex};
use crate::cost_model::CostExpr;
use crate::error::{Error, Result};
use crate::mellin_engine::{lagrange_weights, GridAxis, GridFunction, KernelSpec, LogGrid, STENCIL};

const GL_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_8,
    0.652_145_154_862_546_2,
    0.652_145_154_862_546_2,
    0.347_854_845_137_453_8,
];

/// Largest extended p-grid axis accepted by the batch reduction.
const MAX_EXTENDED_LEN: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelScheme {
    Direct,
    Coarea,
}

#[derive(Clone, Copy, Debug)]
pub struct KernelOptions {
    pub scheme: KernelScheme,
    /// Per-axis subsamples in cells cut by the kink of `h`.
    pub subsamples: usize,
    /// Nodes of the `tau` quadrature, rounded up to a multiple of four.
    pub t_nodes: usize,
}

impl Default for KernelOptions {
    fn default() -> Self {
        Self {
            scheme: KernelScheme::Direct,
            subsamples: 16,
            t_nodes: 512,
        }
    }
}

impl KernelOptions {
    pub fn scheme(scheme: KernelScheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }
}

/// `int_a^b g` by `panels` Gauss-Legendre panels.
pub(crate) fn gauss_legendre(a: f64, b: f64, panels: usize, g: impl Fn(f64) -> f64 + Sync) -> f64 {
    if !(b > a) || panels == 0 {
        return 0.0;
    }
    let w = (b - a) / panels as f64;
    let sums: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|k| {
            let mid = a + (k as f64 + 0.5) * w;
            GL_NODES
                .iter()
                .zip(GL_WEIGHTS)
                .map(|(x, wt)| wt * g(mid + 0.5 * w * x))
                .sum::<f64>()
        })
        .collect();
    0.5 * w * sums.iter().sum::<f64>()
}

/// `[q_p(e^lo), q_p(e^hi)]`, the values of `q_p` met on the box.
pub(crate) fn q_range(q: &CostExpr, p: &[f64], lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let xl: Vec<f64> = lo.iter().map(|v| v.exp()).collect();
    let xh: Vec<f64> = hi.iter().map(|v| v.exp()).collect();
    (q.scaled_value(p, &xl), q.scaled_value(p, &xh))
}

fn check_inputs(f: &GridFunction, q: &CostExpr, h: &KernelSpec, p: &[f64]) -> Result<()> {
    check_point(q, p, "p")?;
    h.validate()?;
    if f.dim() != q.dim() {
        return Err(Error::Shape("density and cost dimensions differ".into()));
    }
    Ok(())
}

fn direct(f: &GridFunction, q: &CostExpr, h: &KernelSpec, p: &[f64], m: usize) -> f64 {
    let grid = f.grid();
    let n = grid.dim();
    let strides = grid.strides();
    let mut y = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut qv = Vec::with_capacity(grid.len());
    let mut gv = Vec::with_capacity(grid.len());
    for (k, fv) in f.values().iter().enumerate() {
        grid.log_point(k, &mut y);
        for i in 0..n {
            x[i] = y[i].exp();
        }
        qv.push(q.scaled_value(p, &x));
        gv.push(fv * y.iter().sum::<f64>().exp());
    }
    let kink = h.kink();
    let vol = grid.cell_volume();
    let corners = 1usize << n;
    let cells: Vec<usize> = grid.axes().iter().map(|a| a.len - 1).collect();
    let rows = cells[0];
    let per_row: usize = cells[1..].iter().product();
    let sums: Vec<f64> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let mut lower = vec![0usize; n];
            let mut t = vec![0.0; n];
            let mut xs = vec![0.0; n];
            let mut g = vec![0.0; corners];
            let mut acc = 0.0;
            for j in 0..per_row {
                lower[0] = r;
                let mut rem = j;
                for i in (1..n).rev() {
                    lower[i] = rem % cells[i];
                    rem /= cells[i];
                }
                let flat = |code: usize| -> usize {
                    (0..n).map(|i| (lower[i] + ((code >> i) & 1)) * strides[i]).sum()
                };
                for (c, gc) in g.iter_mut().enumerate() {
                    *gc = gv[flat(c)];
                }
                if g.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let (qmin, qmax) = (qv[flat(0)], qv[flat(corners - 1)]);
                let cut = kink.is_some_and(|k| qmin < k && k < qmax);
                if !cut {
                    let s: f64 = (0..corners).map(|c| g[c] * h.eval(qv[flat(c)])).sum();
                    acc += s / corners as f64 * vol;
                    continue;
                }
                let total = m.pow(n as u32);
                let mut s = 0.0;
                for sub in 0..total {
                    let mut rem = sub;
                    for i in 0..n {
                        t[i] = ((rem % m) as f64 + 0.5) / m as f64;
                        rem /= m;
                        let ax = grid.axis(i);
                        xs[i] = (ax.y(lower[i]) + t[i] * ax.dy).exp();
                    }
                    let hv = h.eval(q.scaled_value(p, &xs));
                    if hv == 0.0 {
                        continue;
                    }
                    let gi: f64 = (0..corners)
                        .map(|c| {
                            let w: f64 = (0..n)
                                .map(|i| if (c >> i) & 1 == 1 { t[i] } else { 1.0 - t[i] })
                                .product();
                            w * g[c]
                        })
                        .sum();
                    s += hv * gi;
                }
                acc += s / total as f64 * vol;
            }
            acc
        })
        .collect();
    sums.iter().sum()
}

/// `int h(e^tau) (R_q f)(p e^{-tau}) dtau` over the `tau` range met on the grid.
fn coarea(f: &GridFunction, q: &CostExpr, h: &KernelSpec, p: &[f64], nodes: usize) -> Result<f64> {
    let (lo, hi) = f.log_box();
    let (tmin, tmax) = q_range(q, p, &lo, &hi);
    let a = tmin.ln() + 1e-12;
    let b = tmax.min(h.support_end()).ln() - 1e-12;
    let step = f.grid().axes().iter().map(|ax| ax.dy).fold(f64::INFINITY, f64::min) / 4.0;
    let panels = nodes.div_ceil(4).max(1);
    let failure = std::sync::Mutex::new(None);
    let v = gauss_legendre(a, b, panels, |tau| {
        let pt: Vec<f64> = p.iter().map(|v| v * (-tau).exp()).collect();
        match radon_simplex(f, q, &pt, step) {
            Ok(r) => h.eval(tau.exp()) * r,
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                0.0
            }
        }
    });
    match failure.into_inner().expect("poisoned") {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// `(R^h_q f)(p)` at one point.
pub fn rhq_forward(f: &GridFunction, q: &CostExpr, h: &KernelSpec, p: &[f64], opts: &KernelOptions) -> Result<f64> {
    check_inputs(f, q, h, p)?;
    match opts.scheme {
        KernelScheme::Direct => Ok(direct(f, q, h, p, opts.subsamples.max(1))),
        KernelScheme::Coarea => coarea(f, q, h, p, opts.t_nodes),
    }
}

/// `(Pi_q f)(p0, p) = int (p0 - q_p(x))_+ f(x) dx`.
pub fn profit_forward(f: &GridFunction, q: &CostExpr, p0: f64, p: &[f64], opts: &KernelOptions) -> Result<f64> {
    rhq_forward(f, q, &KernelSpec::Profit { p0 }, p, opts)
}

/// Weights `w_k` with `int h(e^tau) r(tau) dtau = sum_k w_k r(k dy)` for the
/// piecewise six-point interpolant `r` of the samples, `k` in `k_lo..=k_hi`.
fn diagonal_weights(h: &KernelSpec, dy: f64, k_lo: i64, k_hi: i64) -> Vec<f64> {
    let mut w = vec![0.0; (k_hi - k_lo + 1) as usize];
    let kink = h.kink().map(f64::ln);
    for j in (k_lo + 2)..(k_hi - 2) {
        let (a, b) = (j as f64 * dy, (j + 1) as f64 * dy);
        let mut pieces = vec![(a, b)];
        if let Some(k) = kink.filter(|k| a < *k && *k < b) {
            pieces = vec![(a, k), (k, b)];
        }
        for (u, v) in pieces {
            let half = 0.5 * (v - u);
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let tau = u + half * (1.0 + x);
                let hv = h.eval(tau.exp());
                if hv == 0.0 {
                    continue;
                }
                let lw = lagrange_weights((tau - a) / dy);
                for (m, l) in lw.iter().enumerate() {
                    w[(j - 2 + m as i64 - k_lo) as usize] += wt * half * hv * l;
                }
            }
        }
    }
    w
}

/// `(R^h_q f)` at every node of `p_grid` from a batch Radon transform on a
/// diagonally extended p-grid.
///
/// All axes must share one spacing, equal to the f-grid spacing, with the
/// p-grid origin on the f-grid lattice.
pub fn rhq_grid(f: &GridFunction, q: &CostExpr, h: &KernelSpec, p_grid: &LogGrid) -> Result<GridFunction> {
    h.validate()?;
    lattice_offsets(f.grid(), p_grid)?;
    let n = p_grid.dim();
    let dy = p_grid.axis(0).dy;
    if p_grid.axes().iter().any(|a| (a.dy - dy).abs() > 1e-12 * dy) {
        return Err(Error::Shape("the diagonal reduction needs one spacing on every axis".into()));
    }
    let (lo, hi) = f.log_box();
    let eta_lo: Vec<f64> = p_grid.axes().iter().map(|a| a.y0.exp()).collect();
    let eta_hi: Vec<f64> = p_grid.axes().iter().map(|a| a.y_last().exp()).collect();
    let tau_lo = q_range(q, &eta_lo, &lo, &hi).0.ln();
    let tau_hi = q_range(q, &eta_hi, &lo, &hi).1.min(h.support_end()).ln();
    let k_lo = (tau_lo / dy).floor() as i64 - 3;
    let k_hi = (tau_hi / dy).ceil() as i64 + 3;
    let len = p_grid.axis(0).len;
    let span = (k_hi - k_lo) as usize;
    let ext_len = (len + span).next_power_of_two();
    if ext_len > MAX_EXTENDED_LEN {
        return Err(Error::Resolution(format!(
            "kernel reduction needs {ext_len} nodes per axis; narrow the grids"
        )));
    }
    let axes = p_grid
        .axes()
        .iter()
        .map(|a| GridAxis::new(a.y0 - k_hi as f64 * dy, dy, ext_len))
        .collect::<Result<Vec<_>>>()?;
    let ext = LogGrid::new(axes)?;
    let r = radon_grid(f, q, &ext)?;
    let w = diagonal_weights(h, dy, k_lo, k_hi);
    let ext_strides = ext.strides();
    let diag: usize = ext_strides.iter().sum();
    let rv = r.values();
    let values: Vec<f64> = (0..p_grid.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; n];
            p_grid.unravel(flat, &mut idx);
            // eta - k dy maps to ext index idx + (k_hi - k).
            let base: usize = idx.iter().zip(&ext_strides).map(|(i, s)| i * s).sum();
            w.iter()
                .enumerate()
                .map(|(m, wk)| {
                    let shift = (k_hi - (k_lo + m as i64)) as usize;
                    wk * rv[base + shift * diag]
                })
                .sum()
        })
        .collect();
    const { assert!(STENCIL == 6) };
    GridFunction::new(p_grid.clone(), values)
}

/// `(Pi_q f)(p0, .)` on `p_grid`; see [`rhq_grid`].
pub fn profit_grid(f: &GridFunction, q: &CostExpr, p0: f64, p_grid: &LogGrid) -> Result<GridFunction> {
    rhq_grid(f, q, &KernelSpec::Profit { p0 }, p_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::default_p_grid;

    fn linear_scene() -> (GridFunction, CostExpr) {
        let grid = LogGrid::cube(2, -10.0, 4.0, 512).unwrap();
        let f = GridFunction::from_fn(grid, |x| (-x[0] - x[1]).exp()).unwrap();
        (f, CostExpr::flat_ces(1.0, 1.0, vec![0.5, 0.5]).unwrap())
    }

    #[test]
    fn exponential_kernel_linear_scene() {
        // int e^{-3 (x1 + x2)/2} dx over the box [a, b]^2.
        let (f, q) = linear_scene();
        let (a, b) = ((-10.0f64).exp(), 4.0f64.exp());
        let exact = (((-1.5 * a).exp() - (-1.5 * b).exp()) / 1.5).powi(2);
        for scheme in [KernelScheme::Direct, KernelScheme::Coarea] {
            let v = rhq_forward(&f, &q, &KernelSpec::Exponential, &[1.0, 1.0], &KernelOptions::scheme(scheme)).unwrap();
            assert!((v - exact).abs() < 1e-6 * exact, "{scheme:?}: {v} vs {exact}");
        }
    }

    /// Truncated-box profit for the linear scene on `[e^lo, e^4]^2`, `p = I`, `p0 = 1`.
    fn linear_profit_exact(lo: f64) -> f64 {
        // Over x_i >= a, shift u = x - a; u1 + u2 = s has density s e^{-s}, so the
        // value is e^{-2a}/2 int_0^S (S - s) s e^{-s} ds = e^{-2a}/2 (S - 2 + (S + 2) e^{-S}),
        // S = 2 - 2a. The upper face lies beyond the support.
        let a = lo.exp();
        let big_s = 2.0 - 2.0 * a;
        (-2.0 * a).exp() / 2.0 * (big_s - 2.0 + (big_s + 2.0) * (-big_s).exp())
    }

    #[test]
    fn profit_linear_scene() {
        let (f, q) = linear_scene();
        let exact = linear_profit_exact(-10.0);
        let v = profit_forward(&f, &q, 1.0, &[1.0, 1.0], &KernelOptions::scheme(KernelScheme::Coarea)).unwrap();
        assert!((v - exact).abs() < 1e-6 * exact, "{v} vs {exact}");
        let v = profit_forward(&f, &q, 1.0, &[1.0, 1.0], &KernelOptions::default()).unwrap();
        assert!((v - exact).abs() < 2e-4 * exact, "{v} vs {exact}");
    }

    #[test]
    fn direct_profit_is_second_order_at_the_kink() {
        let q = CostExpr::flat_ces(1.0, 1.0, vec![0.5, 0.5]).unwrap();
        let exact = linear_profit_exact(-10.0);
        let err = |len: usize| {
            let grid = LogGrid::cube(2, -10.0, 4.0, len).unwrap();
            let f = GridFunction::from_fn(grid, |x| (-x[0] - x[1]).exp()).unwrap();
            (profit_forward(&f, &q, 1.0, &[1.0, 1.0], &KernelOptions::default()).unwrap() - exact).abs()
        };
        let (coarse, fine) = (err(256), err(512));
        assert!(coarse / fine > 3.0, "{coarse:e} -> {fine:e}");
    }

    #[test]
    fn profit_vanishes_below_support() {
        let grid = LogGrid::cube(2, -2.0, 2.0, 64).unwrap();
        let f = GridFunction::from_fn(grid, |_| 1.0).unwrap();
        let q = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5]).unwrap();
        let v = profit_forward(&f, &q, 0.1, &[1.0, 1.0], &KernelOptions::default()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn batch_matches_pointwise() {
        let grid = LogGrid::cube(2, -10.0, 5.0, 256).unwrap();
        let f = GridFunction::from_fn(grid.clone(), |x| (x[0] * x[1]).powi(3) * (-x[0] - x[1]).exp()).unwrap();
        let q = CostExpr::flat_ces(0.5, 1.0, vec![0.3, 0.7]).unwrap();
        let pg = default_p_grid(&grid);
        for h in [KernelSpec::Profit { p0: 1.0 }, KernelSpec::Exponential] {
            let batch = rhq_grid(&f, &q, &h, &pg).unwrap();
            let top = batch.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut eta = [0.0; 2];
            for k in [pg.ravel(&[80, 90]), pg.ravel(&[72, 72]), pg.ravel(&[60, 100]), pg.ravel(&[120, 140])] {
                pg.log_point(k, &mut eta);
                let p = [eta[0].exp(), eta[1].exp()];
                let single = rhq_forward(&f, &q, &h, &p, &KernelOptions::scheme(KernelScheme::Coarea)).unwrap();
                let b = batch.values()[k];
                assert!((b - single).abs() <= 1e-7 * top, "{h:?} {k}: {b} vs {single} (max {top})");
            }
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_septics() {
        let v = gauss_legendre(0.0, 2.0, 3, |x| x.powi(7));
        assert!((v - 32.0).abs() < 1e-12);
    }
}
