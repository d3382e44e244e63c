//! `(R_q f)(p) = int_{q_p(x) = 1} f(x) dS / |grad q_p(x)|`.
//!
//! Three schemes. The simplex scheme writes the level set as
//! `x = e^{l(v) - eta}`, `l(v) = ln phi - ln q(phi)`, `phi = softmax(v, 0)`,
//! `eta = ln p`, which gives
//! `R(e^eta) = e^{-sum eta} int f(e^{l(v) - eta}) q(phi)^{-n} prod phi_i dv`.
//! On a p-grid sharing the f-grid spacing this is a discrete correlation.
//! The volume scheme differences `V(t) = int_{q_p <= t} f` across a thin
//! shell. The level-curve scheme (n = 2) integrates along `x2(x1)`.

use rayon::prelude::*;

use super::correlate::correlate;
use super::density::Density;
use crate::cost_model::CostExpr;
use crate::error::{Error, Result};
use crate::mellin_engine::{lagrange_weights, GridFunction, LogGrid, STENCIL};

/// Largest `|v_i|` on the level-set parameter grid; weights there are below `e^{-45}`.
const V_MAX: f64 = 45.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadonScheme {
    Simplex,
    VolumeDifference,
    LevelCurve,
}

#[derive(Clone, Copy, Debug)]
pub struct RadonOptions {
    pub scheme: RadonScheme,
    /// Shell half-width of the volume scheme; default four times the
    /// largest `q_p` variation over one cell on the level set.
    pub delta: Option<f64>,
    /// Per-axis subsamples in cells cut by a shell boundary.
    pub subsamples: usize,
    /// Combine shells `delta` and `delta / 2` to cancel the `delta^2` term.
    pub richardson: bool,
    /// Simplex parameter step; default a quarter of the smallest spacing.
    pub step: Option<f64>,
    pub curve_nodes: usize,
}

impl Default for RadonOptions {
    fn default() -> Self {
        Self {
            scheme: RadonScheme::VolumeDifference,
            delta: None,
            subsamples: 8,
            richardson: true,
            step: None,
            curve_nodes: 4000,
        }
    }
}

impl RadonOptions {
    pub fn scheme(scheme: RadonScheme) -> Self {
        Self {
            scheme,
            ..Self::default()
        }
    }
}

pub(crate) fn check_point(q: &CostExpr, p: &[f64], what: &str) -> Result<()> {
    if p.len() != q.dim() {
        return Err(Error::Shape(format!("{what} has {} entries, cost has {}", p.len(), q.dim())));
    }
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("{what} component {} must be positive, got {v}", i + 1)));
    }
    Ok(())
}

/// Fails when `{q_p = 1}` misses the box `[e^lo, e^hi]`.
fn check_coverage(q: &CostExpr, p: &[f64], lo: &[f64], hi: &[f64]) -> Result<()> {
    let xl: Vec<f64> = lo.iter().map(|v| v.exp()).collect();
    let xh: Vec<f64> = hi.iter().map(|v| v.exp()).collect();
    let (a, b) = (q.scaled_value(p, &xl), q.scaled_value(p, &xh));
    if a <= 1.0 && 1.0 <= b {
        Ok(())
    } else {
        Err(Error::Coverage(format!(
            "level set q_p = 1 at p = {p:?} lies outside the grid box (q_p ranges over [{a:.3e}, {b:.3e}])"
        )))
    }
}

/// Point `l(v)` of the log level set and its weight `q(phi)^{-n} prod phi`.
#[inline]
fn level_point(q: &CostExpr, v: &[f64], phi: &mut [f64], ell: &mut [f64]) -> f64 {
    let n = ell.len();
    let m = v.iter().copied().fold(0.0f64, f64::max);
    let mut sum = (-m).exp();
    for vi in v {
        sum += (vi - m).exp();
    }
    let ln_sum = sum.ln();
    let mut log_prod = 0.0;
    for i in 0..n {
        let lp = if i + 1 < n { v[i] - m - ln_sum } else { -m - ln_sum };
        ell[i] = lp;
        phi[i] = lp.exp();
        log_prod += lp;
    }
    let lq = q.value(phi).ln();
    for e in ell.iter_mut() {
        *e -= lq;
    }
    (log_prod - n as f64 * lq).exp()
}

/// Integer ranges `j_lo..=j_hi` of `v_i = j dv` covering `[lo_i, hi_i]`.
fn v_ranges(lo: &[f64], hi: &[f64], dv: f64) -> Vec<(i64, i64)> {
    lo.iter()
        .zip(hi)
        .map(|(a, b)| {
            let a = a.max(-V_MAX);
            let b = b.min(V_MAX);
            ((a / dv).floor() as i64, (b / dv).ceil() as i64)
        })
        .collect()
}

fn for_each_v(ranges: &[(i64, i64)], dv: f64, mut visit: impl FnMut(&[f64])) {
    if ranges.iter().any(|(a, b)| b < a) {
        return;
    }
    let mut j: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    let mut v = vec![0.0; ranges.len()];
    loop {
        for (vi, ji) in v.iter_mut().zip(&j) {
            *vi = *ji as f64 * dv;
        }
        visit(&v);
        let mut i = 0;
        while i < j.len() {
            j[i] += 1;
            if j[i] <= ranges[i].1 {
                break;
            }
            j[i] = ranges[i].0;
            i += 1;
        }
        if i == j.len() {
            break;
        }
    }
}

fn default_step(lo: &[f64], hi: &[f64], grid: Option<&LogGrid>) -> f64 {
    match grid {
        Some(g) => g.axes().iter().map(|a| a.dy).fold(f64::INFINITY, f64::min) / 4.0,
        None => lo.iter().zip(hi).map(|(a, b)| (b - a) / 2048.0).fold(f64::INFINITY, f64::min),
    }
}

/// Simplex scheme at one `p`; trapezoid in `v` with step `step`.
pub fn radon_simplex<D: Density + ?Sized>(f: &D, q: &CostExpr, p: &[f64], step: f64) -> Result<f64> {
    check_point(q, p, "p")?;
    if f.dim() != q.dim() {
        return Err(Error::Shape("density and cost dimensions differ".into()));
    }
    if !(step > 0.0) {
        return Err(Error::Resolution(format!("simplex step must be positive, got {step}")));
    }
    let n = q.dim();
    let (lo, hi) = f.log_box();
    check_coverage(q, p, &lo, &hi)?;
    let eta: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    // x_i in the box means l_i - eta_i in [lo_i, hi_i]; v_i = l_i - l_n.
    let vlo: Vec<f64> = (0..n - 1).map(|i| lo[i] + eta[i] - hi[n - 1] - eta[n - 1]).collect();
    let vhi: Vec<f64> = (0..n - 1).map(|i| hi[i] + eta[i] - lo[n - 1] - eta[n - 1]).collect();
    let ranges = v_ranges(&vlo, &vhi, step);
    let outer = ranges[0];
    let rows: Vec<f64> = (outer.0..=outer.1)
        .into_par_iter()
        .map(|j0| {
            let mut sub = ranges.clone();
            sub[0] = (j0, j0);
            let mut phi = vec![0.0; n];
            let mut ell = vec![0.0; n];
            let mut x = vec![0.0; n];
            let mut acc = 0.0;
            for_each_v(&sub, step, |v| {
                let w = level_point(q, v, &mut phi, &mut ell);
                for i in 0..n {
                    x[i] = (ell[i] - eta[i]).exp();
                }
                let fx = f.value(&x);
                if fx != 0.0 {
                    acc += w * fx;
                }
            });
            acc
        })
        .collect();
    let total: f64 = rows.iter().sum();
    let scale = step.powi(n as i32 - 1) * (-eta.iter().sum::<f64>()).exp();
    Ok(total * scale)
}

/// Default p-grid: the f-grid reflected through the origin in log-coordinates.
pub fn default_p_grid(f_grid: &LogGrid) -> LogGrid {
    f_grid.mirrored()
}

/// Per-axis integer offsets `(y0_p + y0_x) / dy` when the two grids share spacing.
pub(crate) fn lattice_offsets(f_grid: &LogGrid, p_grid: &LogGrid) -> Result<Vec<i64>> {
    if f_grid.dim() != p_grid.dim() {
        return Err(Error::Shape("p-grid and f-grid dimensions differ".into()));
    }
    f_grid
        .axes()
        .iter()
        .zip(p_grid.axes())
        .enumerate()
        .map(|(i, (a, b))| {
            if (a.dy - b.dy).abs() > 1e-12 * a.dy {
                return Err(Error::Shape(format!(
                    "axis {}: p-grid spacing {} differs from f-grid spacing {}",
                    i + 1,
                    b.dy,
                    a.dy
                )));
            }
            let o = (a.y0 + b.y0) / a.dy;
            if (o - o.round()).abs() > 1e-6 {
                return Err(Error::Shape(format!(
                    "axis {}: p-grid origin is not on the f-grid lattice",
                    i + 1
                )));
            }
            Ok(o.round() as i64)
        })
        .collect()
}

/// Simplex scheme at every node of `p_grid` by one FFT correlation.
///
/// `p_grid` must share the spacing of the f-grid with origins on its lattice.
pub fn radon_grid(f: &GridFunction, q: &CostExpr, p_grid: &LogGrid) -> Result<GridFunction> {
    let n = q.dim();
    if f.dim() != n {
        return Err(Error::Shape("density and cost dimensions differ".into()));
    }
    let fg = f.grid();
    let offsets = lattice_offsets(fg, p_grid)?;
    let nx = fg.shape();
    let np = p_grid.shape();
    let k_shape: Vec<usize> = nx.iter().zip(&np).map(|(a, b)| a + b - 1).collect();
    let mut kernel = vec![0.0; k_shape.iter().product()];
    let k_strides: Vec<usize> = (0..n)
        .map(|i| k_shape[i + 1..].iter().product())
        .collect();
    let dy: Vec<f64> = fg.axes().iter().map(|a| a.dy).collect();
    let dv = dy.iter().copied().fold(f64::INFINITY, f64::min) / if n == 2 { 4.0 } else { 2.0 };

    let (lo, hi) = f.log_box();
    let margin = STENCIL as f64;
    let pa = p_grid.axes();
    let vlo: Vec<f64> = (0..n - 1)
        .map(|i| lo[i] + pa[i].y0 - hi[n - 1] - pa[n - 1].y_last() - margin * (dy[i] + dy[n - 1]))
        .collect();
    let vhi: Vec<f64> = (0..n - 1)
        .map(|i| hi[i] + pa[i].y_last() - lo[n - 1] - pa[n - 1].y0 + margin * (dy[i] + dy[n - 1]))
        .collect();
    let ranges = v_ranges(&vlo, &vhi, dv);

    let mut phi = vec![0.0; n];
    let mut ell = vec![0.0; n];
    let mut base = vec![0i64; n];
    let mut wts = vec![[0.0; STENCIL]; n];
    for_each_v(&ranges, dv, |v| {
        let w = level_point(q, v, &mut phi, &mut ell);
        if w == 0.0 {
            return;
        }
        for i in 0..n {
            let sigma = ell[i] / dy[i] - offsets[i] as f64;
            let fl = sigma.floor();
            base[i] = fl as i64 - 2;
            wts[i] = lagrange_weights(sigma - fl);
        }
        let mut code = vec![0usize; n];
        'outer: loop {
            let mut flat = 0usize;
            let mut weight = w;
            let mut inside = true;
            for i in 0..n {
                let m = base[i] + code[i] as i64;
                if m < 0 || m >= k_shape[i] as i64 {
                    inside = false;
                    break;
                }
                flat += m as usize * k_strides[i];
                weight *= wts[i][code[i]];
            }
            if inside {
                kernel[flat] += weight;
            }
            for c in code.iter_mut() {
                *c += 1;
                if *c < STENCIL {
                    continue 'outer;
                }
                *c = 0;
            }
            break;
        }
    });

    let raw = correlate(f.values(), &nx, &kernel, &np);
    let scale = dv.powi(n as i32 - 1);
    let mut eta = vec![0.0; n];
    let values = raw
        .iter()
        .enumerate()
        .map(|(k, r)| {
            p_grid.log_point(k, &mut eta);
            r * scale * (-eta.iter().sum::<f64>()).exp()
        })
        .collect();
    GridFunction::new(p_grid.clone(), values)
}

/// Node data shared by the volume scheme.
struct CellField<'a> {
    grid: &'a LogGrid,
    /// `q_p` at nodes.
    qv: Vec<f64>,
    /// `f(x) prod x_i` at nodes.
    gv: Vec<f64>,
    strides: Vec<usize>,
}

impl CellField<'_> {
    fn corner_flat(&self, lower: &[usize], code: usize) -> usize {
        lower
            .iter()
            .enumerate()
            .map(|(i, k)| (k + ((code >> i) & 1)) * self.strides[i])
            .sum()
    }

    fn q_range(&self, lower: &[usize]) -> (f64, f64) {
        let full = (1usize << lower.len()) - 1;
        (self.qv[self.corner_flat(lower, 0)], self.qv[self.corner_flat(lower, full)])
    }
}

fn cell_count(grid: &LogGrid) -> usize {
    grid.axes().iter().map(|a| a.len - 1).product()
}

fn cell_lower(grid: &LogGrid, mut c: usize, out: &mut [usize]) {
    for i in (0..grid.dim()).rev() {
        let m = grid.axis(i).len - 1;
        out[i] = c % m;
        c /= m;
    }
}

/// `int_{1 - delta < q_p <= 1 + delta} f dx / (2 delta)`.
fn shell_average(field: &CellField, q: &CostExpr, p: &[f64], delta: f64, m: usize) -> f64 {
    let grid = field.grid;
    let n = grid.dim();
    let vol = grid.cell_volume();
    let (a, b) = (1.0 - delta, 1.0 + delta);
    let inner = grid.axis(0).len - 1;
    let per_row = cell_count(grid) / inner;
    let rows: Vec<f64> = (0..inner)
        .into_par_iter()
        .map(|r| {
            let mut lower = vec![0usize; n];
            let mut y = vec![0.0; n];
            let mut x = vec![0.0; n];
            let mut t = vec![0.0; n];
            let mut acc = 0.0;
            for j in 0..per_row {
                cell_lower(grid, r * per_row + j, &mut lower);
                let (qmin, qmax) = field.q_range(&lower);
                if qmax <= a || qmin > b {
                    continue;
                }
                let corners = 1usize << n;
                if qmin > a && qmax <= b {
                    let s: f64 = (0..corners).map(|c| field.gv[field.corner_flat(&lower, c)]).sum();
                    acc += s / corners as f64 * vol;
                    continue;
                }
                let g: Vec<f64> = (0..corners).map(|c| field.gv[field.corner_flat(&lower, c)]).collect();
                let total = m.pow(n as u32);
                let mut s = 0.0;
                for sub in 0..total {
                    let mut rem = sub;
                    for i in 0..n {
                        t[i] = ((rem % m) as f64 + 0.5) / m as f64;
                        rem /= m;
                        let ax = grid.axis(i);
                        y[i] = ax.y(lower[i]) + t[i] * ax.dy;
                        x[i] = y[i].exp();
                    }
                    let qx = q.scaled_value(p, &x);
                    if qx <= a || qx > b {
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
                    s += gi;
                }
                acc += s / total as f64 * vol;
            }
            acc
        })
        .collect();
    rows.iter().sum::<f64>() / (2.0 * delta)
}

/// Volume-difference scheme on the grid of `f`.
pub fn radon_volume(
    f: &GridFunction,
    q: &CostExpr,
    p: &[f64],
    delta: Option<f64>,
    subsamples: usize,
    richardson: bool,
) -> Result<f64> {
    check_point(q, p, "p")?;
    if f.dim() != q.dim() {
        return Err(Error::Shape("density and cost dimensions differ".into()));
    }
    let grid = f.grid();
    let (lo, hi) = f.log_box();
    check_coverage(q, p, &lo, &hi)?;
    let n = grid.dim();
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
    let field = CellField {
        grid,
        qv,
        gv,
        strides: grid.strides(),
    };
    let mut lower = vec![0usize; n];
    let mut variation: f64 = 0.0;
    for c in 0..cell_count(grid) {
        cell_lower(grid, c, &mut lower);
        let (qmin, qmax) = field.q_range(&lower);
        if qmin <= 1.0 && 1.0 <= qmax {
            variation = variation.max(qmax - qmin);
        }
    }
    let m = subsamples.max(1);
    let delta = delta.unwrap_or(4.0 * variation);
    let smallest = if richardson { delta / 2.0 } else { delta };
    if !(smallest * m as f64 >= variation) {
        return Err(Error::Resolution(format!(
            "shell half-width {smallest:.3e} is below the sub-cell resolution {:.3e}",
            variation / m as f64
        )));
    }
    if !(delta < 1.0) {
        return Err(Error::Resolution(format!(
            "shell half-width {delta:.3e} must be below 1; refine the grid"
        )));
    }
    let s1 = shell_average(&field, q, p, delta, m);
    if !richardson {
        return Ok(s1);
    }
    let s2 = shell_average(&field, q, p, delta / 2.0, m);
    Ok((4.0 * s2 - s1) / 3.0)
}

fn bisect_log(mut a: f64, mut b: f64, g: impl Fn(f64) -> f64) -> f64 {
    // g increasing in the log-variable, g(a) < 0 <= g(b).
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if g(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

fn logit(r: f64) -> f64 {
    (r / (1.0 - r)).ln()
}

/// Level-curve scheme for `n = 2`: `x1 = X1 sigma(u)`, `x2` by bisection.
pub fn radon_level_curve<D: Density + ?Sized>(f: &D, q: &CostExpr, p: &[f64], nodes: usize) -> Result<f64> {
    check_point(q, p, "p")?;
    if q.dim() != 2 || f.dim() != 2 {
        return Err(Error::Shape("the level-curve scheme needs n = 2".into()));
    }
    if nodes < 8 {
        return Err(Error::Resolution("level-curve scheme needs at least 8 nodes".into()));
    }
    let (lo, hi) = f.log_box();
    check_coverage(q, p, &lo, &hi)?;
    let qp = |a: f64, b: f64| q.scaled_value(p, &[a, b]);
    let x2_floor = lo[1] - 14.0;
    // Largest x1 on the curve within the box's x2 range.
    let root_x1 = |ly2: f64| -> Option<f64> {
        let (a, b) = (lo[0] - 60.0, hi[0] + 60.0);
        let y2 = ly2.exp();
        if qp(a.exp(), y2) >= 1.0 || qp(b.exp(), y2) < 1.0 {
            return None;
        }
        Some(bisect_log(a, b, |l| qp(l.exp(), y2) - 1.0))
    };
    let big_x1 = root_x1(x2_floor)
        .ok_or_else(|| Error::Coverage(format!("level set at p = {p:?} does not cross the x2 floor")))?
        .exp();
    let x1_top = root_x1(lo[1]).map(f64::exp).unwrap_or(big_x1).min(hi[0].exp());
    let x1_bottom = root_x1(hi[1]).map(f64::exp).unwrap_or(0.0).max(lo[0].exp());
    if !(x1_bottom < x1_top) {
        return Ok(0.0);
    }
    let u_lo = logit(x1_bottom / big_x1);
    let u_hi = logit((x1_top / big_x1).min(1.0 - 1e-16));
    let du = (u_hi - u_lo) / (nodes - 1) as f64;
    let values: Vec<f64> = (0..nodes)
        .into_par_iter()
        .map(|k| {
            let u = u_lo + k as f64 * du;
            let sig = 1.0 / (1.0 + (-u).exp());
            let x1 = big_x1 * sig;
            let ly2 = bisect_log(x2_floor, hi[1] + 60.0, |l| qp(x1, l.exp()) - 1.0);
            let x = [x1, ly2.exp()];
            let fx = f.value(&x);
            if fx == 0.0 {
                return 0.0;
            }
            let g2 = q.scaled_gradient(p, &x)[1];
            let w = if k == 0 || k == nodes - 1 { 0.5 } else { 1.0 };
            w * fx / g2 * big_x1 * sig * (1.0 - sig)
        })
        .collect();
    Ok(values.iter().sum::<f64>() * du)
}

/// `(R_q f)(p)` with the scheme chosen in `opts`.
pub fn radon_forward(f: &GridFunction, q: &CostExpr, p: &[f64], opts: &RadonOptions) -> Result<f64> {
    match opts.scheme {
        RadonScheme::Simplex => {
            let (lo, hi) = f.log_box();
            let step = opts.step.unwrap_or_else(|| default_step(&lo, &hi, Some(f.grid())));
            radon_simplex(f, q, p, step)
        }
        RadonScheme::VolumeDifference => radon_volume(f, q, p, opts.delta, opts.subsamples, opts.richardson),
        RadonScheme::LevelCurve => radon_level_curve(f, q, p, opts.curve_nodes),
    }
}
