//! Capacity densities: gridded samples or closed-form families.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mellin_engine::{ln_gamma, GridFunction, LogGrid};

/// A function on the positive orthant, zero outside a box in log-coordinates.
pub trait Density: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    /// Lower and upper corners of the support box in log-coordinates.
    fn log_box(&self) -> (Vec<f64>, Vec<f64>);
}

impl Density for GridFunction {
    fn dim(&self) -> usize {
        self.grid().dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.sample(x)
    }

    fn log_box(&self) -> (Vec<f64>, Vec<f64>) {
        let axes = self.grid().axes();
        (
            axes.iter().map(|a| a.y0).collect(),
            axes.iter().map(|a| a.y_last()).collect(),
        )
    }
}

/// Closure density restricted to a log-box.
pub struct FnDensity<F> {
    f: F,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnDensity<F> {
    pub fn new(f: F, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Shape("box corners disagree".into()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(b > a)) {
            return Err(Error::Structure("empty density box".into()));
        }
        Ok(Self { f, lower, upper })
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Density for FnDensity<F> {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let inside = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v > 0.0 && (lo..=hi).contains(&&v.ln()));
        if inside {
            (self.f)(x)
        } else {
            0.0
        }
    }

    fn log_box(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lower.clone(), self.upper.clone())
    }
}

/// Closed-form test densities with known Mellin transforms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Synthetic {
    /// `prod x_i^{k_i} e^{-l_i x_i}`.
    GammaProduct { shapes: Vec<f64>, rates: Vec<f64> },
    /// `prod exp(-(ln x_i - mu_i)^2 / (2 s_i^2))`.
    LognormalBump { mu: Vec<f64>, sigma: Vec<f64> },
    /// `x^b e^{-|x|_1}`.
    PowerTimesExponential { powers: Vec<f64> },
}

impl Synthetic {
    pub fn dim(&self) -> usize {
        match self {
            Synthetic::GammaProduct { shapes, .. } => shapes.len(),
            Synthetic::LognormalBump { mu, .. } => mu.len(),
            Synthetic::PowerTimesExponential { powers } => powers.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Synthetic::GammaProduct { shapes, rates } => {
                shapes.len() == rates.len()
                    && shapes.iter().all(|k| k.is_finite() && *k > -1.0)
                    && rates.iter().all(|l| l.is_finite() && *l > 0.0)
            }
            Synthetic::LognormalBump { mu, sigma } => {
                mu.len() == sigma.len()
                    && mu.iter().all(|m| m.is_finite())
                    && sigma.iter().all(|s| s.is_finite() && *s > 0.0)
            }
            Synthetic::PowerTimesExponential { powers } => {
                powers.iter().all(|b| b.is_finite() && *b > -1.0)
            }
        };
        if ok && self.dim() >= 1 {
            Ok(())
        } else {
            Err(Error::Structure(format!("invalid synthetic density parameters: {self:?}")))
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Synthetic::GammaProduct { shapes, rates } => x
                .iter()
                .zip(shapes.iter().zip(rates))
                .map(|(v, (k, l))| (k * v.ln() - l * v).exp())
                .product(),
            Synthetic::LognormalBump { mu, sigma } => x
                .iter()
                .zip(mu.iter().zip(sigma))
                .map(|(v, (m, s))| {
                    let d = (v.ln() - m) / s;
                    (-0.5 * d * d).exp()
                })
                .product(),
            Synthetic::PowerTimesExponential { powers } => x
                .iter()
                .zip(powers)
                .map(|(v, b)| (b * v.ln() - v).exp())
                .product(),
        }
    }

    /// `(Mf)(w)` in closed form.
    pub fn mellin(&self, w: &[Complex64]) -> Result<Complex64> {
        if w.len() != self.dim() {
            return Err(Error::Shape("exponent length differs from density dimension".into()));
        }
        let mut acc = Complex64::default();
        match self {
            Synthetic::GammaProduct { shapes, rates } => {
                for (wi, (k, l)) in w.iter().zip(shapes.iter().zip(rates)) {
                    let a = wi + k;
                    acc += ln_gamma(a)? - a * l.ln();
                }
            }
            Synthetic::PowerTimesExponential { powers } => {
                for (wi, b) in w.iter().zip(powers) {
                    acc += ln_gamma(wi + b)?;
                }
            }
            Synthetic::LognormalBump { mu, sigma } => {
                for (wi, (m, s)) in w.iter().zip(mu.iter().zip(sigma)) {
                    acc += (2.0 * std::f64::consts::PI).sqrt().ln() + s.ln() + wi * m + 0.5 * wi * wi * s * s;
                }
            }
        }
        Ok(acc.exp())
    }

    pub fn sample(&self, grid: LogGrid) -> Result<GridFunction> {
        if grid.dim() != self.dim() {
            return Err(Error::Shape("grid and density dimensions differ".into()));
        }
        GridFunction::from_fn(grid, |x| self.eval(x))
    }

    /// Closure form restricted to the given log-box.
    pub fn on_box(&self, lower: Vec<f64>, upper: Vec<f64>) -> Result<FnDensity<impl Fn(&[f64]) -> f64 + Sync + '_>> {
        FnDensity::new(move |x: &[f64]| self.eval(x), lower, upper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mellin_engine::{mellin_quadrature, QuadratureBox};

    #[test]
    fn closed_forms_match_quadrature() {
        let z = [Complex64::new(0.6, 1.2), Complex64::new(1.1, -0.4)];
        let b = QuadratureBox::cube(2, -50.0, 8.0, 1200);
        for s in [
            Synthetic::GammaProduct { shapes: vec![2.0, 1.5], rates: vec![1.0, 2.0] },
            Synthetic::LognormalBump { mu: vec![0.3, -0.2], sigma: vec![0.5, 0.8] },
            Synthetic::PowerTimesExponential { powers: vec![0.5, 1.0] },
        ] {
            let closed = s.mellin(&z).unwrap();
            let quad = mellin_quadrature(|x| s.eval(x), &z, &b).unwrap();
            assert!((closed - quad).norm() < 1e-9 * closed.norm(), "{s:?}: {closed} {quad}");
        }
    }

    #[test]
    fn fn_density_is_zero_off_box() {
        let d = FnDensity::new(|_: &[f64]| 1.0, vec![-1.0], vec![1.0]).unwrap();
        assert_eq!(d.value(&[1.0]), 1.0);
        assert_eq!(d.value(&[10.0]), 0.0);
    }
}
