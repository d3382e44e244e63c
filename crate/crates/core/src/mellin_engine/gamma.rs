//! Complex Gamma function: Lanczos approximation with reflection.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 607.0 / 128.0;
#[allow(clippy::excessive_precision)] // published digits, kept verbatim
const LANCZOS: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_76e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_64e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

static FAULT: AtomicBool = AtomicBool::new(false);

/// Perturbs one Lanczos coefficient by 1% while set. Used to check that the
/// self-test detects a broken Gamma.
#[doc(hidden)]
pub fn inject_gamma_fault(on: bool) {
    FAULT.store(on, Ordering::SeqCst);
}

fn is_pole(z: Complex64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

fn ln_gamma_right(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    let fault = FAULT.load(Ordering::Relaxed);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        let c = if k == 1 && fault { c * 1.01 } else { *c };
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// `ln sin(w)` on a branch that stays accurate for large `|Im w|`.
fn ln_sin(w: Complex64) -> Complex64 {
    let i = Complex64::i();
    if w.im > 20.0 {
        -i * w + (i / 2.0).ln() + (1.0 - (2.0 * i * w).exp()).ln()
    } else if w.im < -20.0 {
        i * w + (-i / 2.0).ln() + (1.0 - (-2.0 * i * w).exp()).ln()
    } else {
        w.sin().ln()
    }
}

/// `ln Gamma(z)`; the imaginary part is defined up to multiples of `2 pi`.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("Gamma argument {z} is not finite")));
    }
    if is_pole(z) {
        return Err(Error::Pole(format!("Gamma has a pole at {}", z.re)));
    }
    if z.re < 0.5 {
        Ok(Complex64::new(PI.ln(), 0.0) - ln_sin(PI * z) - ln_gamma_right(1.0 - z))
    } else {
        Ok(ln_gamma_right(z))
    }
}

pub fn gamma(z: Complex64) -> Result<Complex64> {
    ln_gamma(z).map(|v| v.exp())
}

/// Real `Gamma(x)` for `x > 0`.
pub fn gamma_real(x: f64) -> Result<f64> {
    gamma(Complex64::new(x, 0.0)).map(|v| v.re)
}

pub fn ln_gamma_real(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("real ln Gamma needs x > 0, got {x}")));
    }
    ln_gamma(Complex64::new(x, 0.0)).map(|v| v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm()
    }

    #[test]
    fn integers_and_half() {
        let mut fact = 1.0;
        for n in 1..20 {
            let g = gamma_real(n as f64).unwrap();
            assert!((g - fact).abs() <= 1e-13 * fact, "{n}: {g}");
            fact *= n as f64;
        }
        assert!((gamma_real(0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn complex_reference_values() {
        // mpmath.gamma at 30 digits.
        let cases = [
            ((1.0, 1.0), (0.498_015_668_118_356_05, -0.154_949_828_301_810_7)),
            ((0.5, -3.0), (0.021_445_670_552_430_646, -0.006_865_364_837_261_678)),
            ((-2.5, 0.5), (-0.333_875_203_522_432_34, -0.206_457_307_963_608_4)),
        ];
        for ((zr, zi), (gr, gi)) in cases {
            let g = gamma(Complex64::new(zr, zi)).unwrap();
            assert!(close(g, Complex64::new(gr, gi), 1e-12), "{zr}+{zi}i: {g}");
        }
    }

    #[test]
    fn reflection_formula() {
        for z in [Complex64::new(0.3, 2.0), Complex64::new(-4.2, -7.5), Complex64::new(0.1, 40.0)] {
            let lhs = ln_gamma(z).unwrap() + ln_gamma(1.0 - z).unwrap();
            let rhs = Complex64::new(PI, 0.0).ln() - (PI * z).sin().ln();
            let d = (lhs - rhs).exp();
            assert!((d - 1.0).norm() < 1e-11, "{z}: {d}");
        }
    }

    #[test]
    fn recurrence_far_up_the_strip() {
        for im in [-80.0, -10.0, 5.0, 95.0] {
            let z = Complex64::new(1.7, im);
            let r = (ln_gamma(z + 1.0).unwrap() - ln_gamma(z).unwrap() - z.ln()).exp();
            assert!((r - 1.0).norm() < 1e-11, "{im}: {r}");
        }
    }

    #[test]
    fn poles_are_reported() {
        for p in [0.0, -1.0, -7.0] {
            assert!(matches!(gamma(Complex64::new(p, 0.0)), Err(Error::Pole(_))));
        }
    }
}
