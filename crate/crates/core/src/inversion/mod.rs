//! Recovery of `f` from samples of `R_q f`, `R^h_q f` or `Pi_q f` by
//! Tikhonov-regularized division on a Mellin plane.
//!
//! On `Re z = c` the forward symbol is `K(z) (Mh)(s) / Gamma(s)` with
//! `K = Me^{-q}` and `s = z_1 + ... + z_n`; `Mh = 1` for `R_q`. The estimate
//! of `(Mf)(I - z)` is `Gamma(s) G(z) conj(K_eff) / (|K_eff|^2 + eps^2)`,
//! `K_eff = K Mh`, stored on the plane `I - c` with negated frequencies.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cost_model::CostExpr;
use crate::diagnostics::kernel_zero_scan;
use crate::error::{Error, Result};
use crate::mellin_engine::{
    gamma, mellin_expcost_closed, mellin_forward, mellin_inverse, ForwardOptions, GridFunction, KernelSpec,
    MellinSlice,
};

/// Engineering default; not derived from any stability bound.
pub const DEFAULT_EPSILON: f64 = 1e-6;
/// `|K_eff|` below this with `epsilon = 0` is a division instability.
pub const DIVISION_FLOOR: f64 = f64::MIN_POSITIVE;
/// Central fraction of each axis used for interior errors.
pub const INTERIOR_FRACTION: f64 = 0.6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InversionOptions {
    pub c: Vec<f64>,
    pub epsilon: f64,
    pub taper: bool,
    /// Bins with Euclidean frequency norm above this are zeroed.
    pub cutoff: Option<f64>,
}

impl InversionOptions {
    pub fn new(c: Vec<f64>, epsilon: f64) -> Result<Self> {
        let opts = Self {
            c,
            epsilon,
            taper: false,
            cutoff: None,
        };
        opts.validate()?;
        Ok(opts)
    }

    /// Plane `c = I/2`, default epsilon, no taper, no cutoff.
    pub fn self_dual(dim: usize) -> Self {
        Self {
            c: vec![0.5; dim],
            epsilon: DEFAULT_EPSILON,
            taper: false,
            cutoff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.is_empty() || self.c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain(format!("inversion plane must be positive, got {:?}", self.c)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Domain(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if let Some(r) = self.cutoff {
            if !(r > 0.0) {
                return Err(Error::Domain(format!("cutoff radius must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

/// Deconvolved slice on `Re w = I - c` with the smallest `|K_eff|` met.
#[derive(Clone, Debug)]
pub struct Deconvolved {
    pub slice: MellinSlice,
    pub min_abs_k: f64,
}

/// Regularized division of `g_slice` by `K(z) (Mh)(s) / Gamma(s)`.
pub fn deconvolve<H>(g_slice: &MellinSlice, q: &CostExpr, mh: H, opts: &InversionOptions) -> Result<Deconvolved>
where
    H: Fn(Complex64) -> Result<Complex64> + Sync,
{
    opts.validate()?;
    if g_slice.dim() != q.dim() || opts.c.len() != q.dim() {
        return Err(Error::Shape("slice, plane and cost dimensions differ".into()));
    }
    if g_slice.c.iter().zip(&opts.c).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::Argument(format!(
            "slice lies on c = {:?}, options ask for {:?}",
            g_slice.c, opts.c
        )));
    }
    let n = q.dim();
    let eps2 = opts.epsilon * opts.epsilon;
    let solved: Vec<(Complex64, f64)> = (0..g_slice.len())
        .into_par_iter()
        .map(|m| {
            let mut z = vec![Complex64::default(); n];
            g_slice.point(m, &mut z);
            if let Some(r) = opts.cutoff {
                if z.iter().map(|v| v.im * v.im).sum::<f64>().sqrt() > r {
                    return Ok((Complex64::default(), f64::INFINITY));
                }
            }
            let s: Complex64 = z.iter().sum();
            let k = mellin_expcost_closed(q, &z)? * mh(s)?;
            let mod2 = k.norm_sqr();
            if opts.epsilon == 0.0 && k.norm() < DIVISION_FLOOR {
                return Err(Error::DivisionInstability {
                    frequency: z.iter().map(|v| v.im).collect(),
                    modulus: k.norm(),
                });
            }
            let g = g_slice.values[m];
            let v = if g == Complex64::default() {
                g
            } else {
                gamma(s)? * g * k.conj() / (mod2 + eps2)
            };
            Ok((v, k.norm()))
        })
        .collect::<Result<_>>()?;
    let reflect = g_slice.reflect_index();
    let mut values = vec![Complex64::default(); g_slice.len()];
    let mut min_abs_k = f64::INFINITY;
    for (m, (v, k)) in solved.into_iter().enumerate() {
        values[reflect[m]] = v;
        min_abs_k = min_abs_k.min(k);
    }
    Ok(Deconvolved {
        slice: MellinSlice {
            c: opts.c.iter().map(|v| 1.0 - v).collect(),
            axes: g_slice.axes.clone(),
            values,
            tapered: g_slice.tapered,
        },
        min_abs_k,
    })
}

/// `(Mf)` on `I - c` from `(M R_q f)` on `c`.
pub fn deconvolve_radon(g_slice: &MellinSlice, q: &CostExpr, opts: &InversionOptions) -> Result<MellinSlice> {
    deconvolve(g_slice, q, |_| Ok(Complex64::new(1.0, 0.0)), opts).map(|d| d.slice)
}

/// Frequency interval of `tau = Im s` where `(Mh)(alpha + i tau)` vanishes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroBand {
    pub center: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InversionReport {
    pub operator: &'static str,
    pub epsilon: f64,
    pub c: Vec<f64>,
    pub interior_l2_error: Option<f64>,
    pub min_abs_k: f64,
    pub flagged_zero_bands: Vec<ZeroBand>,
    /// `max |Im| / max |Re|` of the reconstructed `E_{I-c} f`.
    pub imaginary_residue: f64,
}

#[derive(Clone, Debug)]
pub struct Inversion {
    pub estimate: GridFunction,
    pub report: InversionReport,
}

impl Inversion {
    /// Fills `interior_l2_error` against a known `f` on the estimate grid.
    pub fn with_truth(mut self, truth: &GridFunction) -> Result<Self> {
        self.report.interior_l2_error = Some(interior_l2_error(&self.estimate, truth)?);
        Ok(self)
    }
}

/// Relative `L^2` error over the central [`INTERIOR_FRACTION`] of every axis,
/// with the uniform measure of the log-grid.
pub fn interior_l2_error(estimate: &GridFunction, truth: &GridFunction) -> Result<f64> {
    if estimate.grid() != truth.grid() {
        return Err(Error::Shape("estimate and truth live on different grids".into()));
    }
    let mask = truth.grid().interior_mask(INTERIOR_FRACTION);
    let (mut num, mut den) = (0.0, 0.0);
    for ((e, t), inside) in estimate.values().iter().zip(truth.values()).zip(mask) {
        if inside {
            num += (e - t) * (e - t);
            den += t * t;
        }
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { num.sqrt() })
}

fn pipeline<H>(
    g: &GridFunction,
    q: &CostExpr,
    mh: H,
    opts: &InversionOptions,
    operator: &'static str,
) -> Result<Inversion>
where
    H: Fn(Complex64) -> Result<Complex64> + Sync,
{
    opts.validate()?;
    if g.dim() != q.dim() || opts.c.len() != q.dim() {
        return Err(Error::Shape("data, plane and cost dimensions differ".into()));
    }
    let slice = mellin_forward(g, &opts.c, ForwardOptions { taper: opts.taper })?;
    let d = deconvolve(&slice, q, mh, opts)?;
    let y0: Vec<f64> = g.grid().mirrored().axes().iter().map(|a| a.y0).collect();
    let out = mellin_inverse(&d.slice, &y0)?;
    Ok(Inversion {
        estimate: out.function,
        report: InversionReport {
            operator,
            epsilon: opts.epsilon,
            c: opts.c.clone(),
            interior_l2_error: None,
            min_abs_k: d.min_abs_k,
            flagged_zero_bands: Vec::new(),
            imaginary_residue: out.imaginary_residue,
        },
    })
}

/// Estimate of `f` on the mirrored grid from `g = R_q f` on a p-grid.
pub fn invert_radon(g: &GridFunction, q: &CostExpr, opts: &InversionOptions) -> Result<Inversion> {
    pipeline(g, q, |_| Ok(Complex64::new(1.0, 0.0)), opts, "R_q")
}

/// Estimate of `f` from `Pi_q f(p0, .)` sampled on a p-grid.
pub fn invert_profit(pi: &GridFunction, p0: f64, q: &CostExpr, opts: &InversionOptions) -> Result<Inversion> {
    let h = KernelSpec::Profit { p0 };
    h.validate()?;
    pipeline(pi, q, |s| h.mellin(s), opts, "Pi_q")
}

/// Estimate of `f` from `R^h_q f`. Zeros of `(Mh)` on `Re s = alpha` inside
/// the slice's frequency range are reported as flagged bands.
pub fn invert_kernel(gh: &GridFunction, q: &CostExpr, h: &KernelSpec, opts: &InversionOptions) -> Result<Inversion> {
    h.validate()?;
    let mut inv = pipeline(gh, q, |s| h.mellin(s), opts, "R^h_q")?;
    if !h.is_analytic() {
        let alpha: f64 = opts.c.iter().sum();
        let radius: f64 = gh
            .grid()
            .axes()
            .iter()
            .map(|a| std::f64::consts::PI / a.dy)
            .sum();
        let resolution = ((radius / 0.05).ceil() as usize).clamp(256, 1 << 16);
        let scan = kernel_zero_scan(h, alpha, radius, resolution)?;
        let w = scan.spacing[0];
        inv.report.flagged_zero_bands = scan
            .candidates
            .iter()
            .map(|z| ZeroBand {
                center: z.xi[0],
                lower: z.xi[0] - w,
                upper: z.xi[0] + w,
            })
            .collect();
        inv.report
            .flagged_zero_bands
            .sort_by(|a, b| a.center.total_cmp(&b.center));
    }
    Ok(inv)
}
