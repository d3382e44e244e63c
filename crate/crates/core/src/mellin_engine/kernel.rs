//! One-dimensional kernels `h` on `(0, inf)` and their Mellin transforms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gamma::{gamma, ln_gamma_real};
use crate::error::{Error, Result};

/// Kernel sampled on a uniform grid in `ln t`, linear in between, zero outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledKernel {
    pub y0: f64,
    pub dy: f64,
    pub values: Vec<f64>,
}

impl SampledKernel {
    pub fn from_fn(y0: f64, dy: f64, len: usize, h: impl Fn(f64) -> f64) -> Result<Self> {
        if !(dy > 0.0) || len < 4 {
            return Err(Error::Structure("sampled kernel needs dy > 0 and at least 4 nodes".into()));
        }
        let values: Vec<f64> = (0..len).map(|k| h((y0 + k as f64 * dy).exp())).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("kernel samples must be finite".into()));
        }
        Ok(Self { y0, dy, values })
    }

    fn y_last(&self) -> f64 {
        self.y0 + (self.values.len() - 1) as f64 * self.dy
    }

    fn eval(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let s = (t.ln() - self.y0) / self.dy;
        let n = self.values.len();
        if !(s >= 0.0 && s <= (n - 1) as f64) {
            return 0.0;
        }
        let k = (s.floor() as usize).min(n - 2);
        let f = s - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }

    /// Trapezoid sum of `h(e^y) e^{s y}` over the grid.
    fn mellin(&self, s: Complex64) -> Complex64 {
        let n = self.values.len();
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                (s * (self.y0 + k as f64 * self.dy)).exp() * (w * v * self.dy)
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelSpec {
    /// `(p0 - t)_+`, the profit kernel.
    Profit { p0: f64 },
    /// `e^{-t}`.
    Exponential,
    Sampled(SampledKernel),
}

impl KernelSpec {
    /// `e^{-t} - e * e^{-e t}`, a kernel whose transform vanishes on `Re s = 1`
    /// at `s = 1 + 2 pi i k` for every integer `k`.
    pub fn two_exponential() -> Self {
        let e = std::f64::consts::E;
        let (lo, hi, len) = (-40.0, 6.0, 4096);
        KernelSpec::Sampled(
            SampledKernel::from_fn(lo, (hi - lo) / (len - 1) as f64, len, |t| {
                (-t).exp() - e * (-e * t).exp()
            })
            .expect("static kernel grid is valid"),
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Profit { p0 } if !(p0.is_finite() && *p0 > 0.0) => {
                Err(Error::Domain(format!("profit kernel needs p0 > 0, got {p0}")))
            }
            KernelSpec::Sampled(s) if s.values.len() < 4 || !(s.dy > 0.0) => {
                Err(Error::Structure("sampled kernel grid is degenerate".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            KernelSpec::Profit { p0 } => (p0 - t).max(0.0),
            KernelSpec::Exponential => (-t).exp(),
            KernelSpec::Sampled(s) => s.eval(t),
        }
    }

    /// Point where `h` fails to be smooth, if any.
    pub fn kink(&self) -> Option<f64> {
        match self {
            KernelSpec::Profit { p0 } => Some(*p0),
            _ => None,
        }
    }

    /// Right end of the support, `inf` when unbounded.
    pub fn support_end(&self) -> f64 {
        match self {
            KernelSpec::Profit { p0 } => *p0,
            KernelSpec::Exponential => f64::INFINITY,
            KernelSpec::Sampled(s) => s.y_last().exp(),
        }
    }

    /// Closed-form transform is available and has no zeros in the strip.
    pub fn is_analytic(&self) -> bool {
        !matches!(self, KernelSpec::Sampled(_))
    }

    /// `(Mh)(s) = int t^{s-1} h(t) dt`.
    pub fn mellin(&self, s: Complex64) -> Result<Complex64> {
        if !(s.re > 0.0) {
            return Err(Error::Integrability(format!(
                "kernel transform needs Re s > 0, got {}",
                s.re
            )));
        }
        match self {
            KernelSpec::Profit { p0 } => Ok(((s + 1.0) * p0.ln()).exp() / (s * (s + 1.0))),
            KernelSpec::Exponential => gamma(s),
            KernelSpec::Sampled(k) => Ok(k.mellin(s)),
        }
    }

    /// `||h||_{1, alpha} = int |h(t)| t^{alpha - 1} dt`.
    pub fn weighted_l1(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::Integrability(format!("weighted norm needs alpha > 0, got {alpha}")));
        }
        match self {
            KernelSpec::Profit { p0 } => Ok(p0.powf(alpha + 1.0) / (alpha * (alpha + 1.0))),
            KernelSpec::Exponential => ln_gamma_real(alpha).map(f64::exp),
            KernelSpec::Sampled(k) => {
                let abs = SampledKernel {
                    values: k.values.iter().map(|v| v.abs()).collect(),
                    ..k.clone()
                };
                Ok(abs.mellin(Complex64::new(alpha, 0.0)).re)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profit_transform_matches_integral() {
        // int_0^2 t^{s-1} (2 - t) dt at s = 1: 2*2 - 2 = 2.
        let k = KernelSpec::Profit { p0: 2.0 };
        let v = k.mellin(Complex64::new(1.0, 0.0)).unwrap();
        assert!((v.re - 2.0).abs() < 1e-14 && v.im.abs() < 1e-14);
        assert!((k.weighted_l1(1.0).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn two_exponential_zeros() {
        let k = KernelSpec::two_exponential();
        let step = 2.0 * std::f64::consts::PI;
        for kk in [1.0, 2.0, -3.0] {
            let v = k.mellin(Complex64::new(1.0, kk * step)).unwrap();
            assert!(v.norm() < 1e-8, "{kk}: {v}");
        }
        // Off the zero set it matches Gamma(s)(1 - e^{1-s}).
        let s = Complex64::new(1.0, 2.0);
        let exact = gamma(s).unwrap() * (1.0 - (1.0 - s).exp());
        assert!((k.mellin(s).unwrap() - exact).norm() < 1e-8);
    }

    #[test]
    fn strip_is_enforced() {
        assert!(KernelSpec::Exponential.mellin(Complex64::new(0.0, 1.0)).is_err());
    }
}
