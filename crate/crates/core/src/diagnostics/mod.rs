//! Injectivity diagnostics: zero scans of `(Me^{-q})(c + i xi)` and of
//! `(Mh)(alpha + i tau)`, and verdicts combining them.
//!
//! A lattice point is a zero candidate when `|K|` has an interior local
//! minimum there along some axis and a golden-section refinement along that
//! axis drives `|K|` below `DIP_RATIO` times the larger neighbouring modulus.
//! Smooth Gamma-type decay never passes this test; a zero within one cell does.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::cost_model::CostExpr;
use crate::error::{Error, Result};
use crate::mellin_engine::{mellin_expcost_closed, KernelSpec};
use crate::transforms::{NormOrder, Operator};

/// Refined modulus over neighbouring modulus below which a dip is a zero.
pub const DIP_RATIO: f64 = 1e-3;
/// Fraction of flagged lattice points from which a scan reports a zero region.
pub const REGION_FRACTION: f64 = 0.1;
const MIN_RESOLUTION: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroClass {
    NoZeroDetected,
    IsolatedZeros,
    ZeroRegion,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroCandidate {
    /// Refined location.
    pub xi: Vec<f64>,
    pub modulus: f64,
    /// Lattice node that triggered the refinement.
    pub lattice_xi: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroScanReport {
    /// Real part of the scanned plane or line.
    pub c: Vec<f64>,
    pub radius: Vec<f64>,
    pub resolution: usize,
    pub spacing: Vec<f64>,
    pub min_modulus: f64,
    pub argmin: Vec<f64>,
    pub median_modulus: f64,
    pub dip_ratio: f64,
    pub candidates: Vec<ZeroCandidate>,
    pub classification: ZeroClass,
    /// Nonvanishing certified by a closed form (Gamma products, profit kernel).
    pub analytic: bool,
}

struct Lattice {
    radius: Vec<f64>,
    res: usize,
}

impl Lattice {
    fn spacing(&self, i: usize) -> f64 {
        2.0 * self.radius[i] / (self.res - 1) as f64
    }

    fn coord(&self, i: usize, k: usize) -> f64 {
        -self.radius[i] + k as f64 * self.spacing(i)
    }

    fn len(&self) -> usize {
        self.res.pow(self.radius.len() as u32)
    }

    fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for o in out.iter_mut().rev() {
            *o = flat % self.res;
            flat /= self.res;
        }
    }

    fn stride(&self, i: usize) -> usize {
        self.res.pow((self.radius.len() - 1 - i) as u32)
    }
}

fn golden_min(a: f64, b: f64, g: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..80 {
        if g1 <= g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = g(x2);
        }
    }
    if g1 <= g2 {
        (x1, g1)
    } else {
        (x2, g2)
    }
}

/// Scans `|k(xi)|` on the lattice `[-radius, radius]` with `resolution`
/// nodes per axis; `k` is evaluated at real frequency vectors.
pub fn scan_modulus<K>(k: K, c: &[f64], radius: &[f64], resolution: usize, analytic: bool) -> Result<ZeroScanReport>
where
    K: Fn(&[f64]) -> Result<Complex64> + Sync,
{
    if resolution < MIN_RESOLUTION {
        return Err(Error::Argument(format!("scan resolution must be at least {MIN_RESOLUTION}")));
    }
    if radius.is_empty() || radius.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::Argument("scan radius must be positive on every axis".into()));
    }
    let lat = Lattice {
        radius: radius.to_vec(),
        res: resolution,
    };
    let n = radius.len();
    let moduli: Vec<f64> = (0..lat.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0; n];
            lat.unravel(flat, &mut idx);
            let xi: Vec<f64> = (0..n).map(|i| lat.coord(i, idx[i])).collect();
            k(&xi).map(|v| v.norm())
        })
        .collect::<Result<_>>()?;
    let (arg, min_modulus) = moduli
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(ai, am), (i, m)| if *m < am { (i, *m) } else { (ai, am) });
    let mut idx = vec![0; n];
    lat.unravel(arg, &mut idx);
    let argmin: Vec<f64> = (0..n).map(|i| lat.coord(i, idx[i])).collect();
    let mut sorted = moduli.clone();
    sorted.sort_by(f64::total_cmp);
    let median_modulus = sorted[sorted.len() / 2];

    let found: Vec<Option<ZeroCandidate>> = (0..lat.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0; n];
            lat.unravel(flat, &mut idx);
            let m = moduli[flat];
            for axis in 0..n {
                if idx[axis] == 0 || idx[axis] + 1 == resolution {
                    continue;
                }
                let st = lat.stride(axis);
                let (left, right) = (moduli[flat - st], moduli[flat + st]);
                if !(m <= left * (1.0 + 1e-9) && m < right) {
                    continue;
                }
                let base: Vec<f64> = (0..n).map(|i| lat.coord(i, idx[i])).collect();
                let h = lat.spacing(axis);
                let eval = |t: f64| {
                    let mut xi = base.clone();
                    xi[axis] = t;
                    k(&xi).map(|v| v.norm()).unwrap_or(f64::INFINITY)
                };
                let (t, v) = golden_min(base[axis] - h, base[axis] + h, eval);
                if v < DIP_RATIO * left.max(right) {
                    let mut xi = base.clone();
                    xi[axis] = t;
                    return Some(ZeroCandidate {
                        xi,
                        modulus: v,
                        lattice_xi: base,
                    });
                }
            }
            None
        })
        .collect();
    let mut candidates: Vec<ZeroCandidate> = Vec::new();
    for c in found.into_iter().flatten() {
        let dup = candidates.iter().any(|d| {
            d.xi.iter()
                .zip(&c.xi)
                .enumerate()
                .all(|(i, (a, b))| (a - b).abs() <= 0.5 * lat.spacing(i))
        });
        if !dup {
            candidates.push(c);
        }
    }
    candidates.sort_by(|a, b| a.modulus.total_cmp(&b.modulus));
    let classification = if candidates.is_empty() {
        ZeroClass::NoZeroDetected
    } else if candidates.len() as f64 > REGION_FRACTION * lat.len() as f64 {
        ZeroClass::ZeroRegion
    } else {
        ZeroClass::IsolatedZeros
    };
    Ok(ZeroScanReport {
        c: c.to_vec(),
        radius: radius.to_vec(),
        resolution,
        spacing: (0..n).map(|i| lat.spacing(i)).collect(),
        min_modulus,
        argmin,
        median_modulus,
        dip_ratio: DIP_RATIO,
        candidates,
        classification,
        analytic,
    })
}

fn plane_point(c: &[f64], xi: &[f64]) -> Vec<Complex64> {
    c.iter().zip(xi).map(|(a, b)| Complex64::new(*a, *b)).collect()
}

/// Zero scan of `(Me^{-q})(c + i xi)` over `|xi_i| <= radius`.
///
/// CES trees carry the analytic flag: the closed form is a product of Gamma
/// values and never vanishes.
pub fn zero_scan(q: &CostExpr, c: &[f64], radius: f64, resolution: usize) -> Result<ZeroScanReport> {
    if c.len() != q.dim() {
        return Err(Error::Shape("plane and cost dimensions differ".into()));
    }
    if c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain(format!("plane must lie in Re z > 0, got {c:?}")));
    }
    let mut rep = scan_modulus(
        |xi| mellin_expcost_closed(q, &plane_point(c, xi)),
        c,
        &vec![radius; q.dim()],
        resolution,
        true,
    )?;
    rep.analytic = rep.min_modulus > 0.0;
    Ok(rep)
}

/// Zero scan of `(Mh)(alpha + i tau)` over `|tau| <= radius`.
pub fn kernel_zero_scan(h: &KernelSpec, alpha: f64, radius: f64, resolution: usize) -> Result<ZeroScanReport> {
    h.validate()?;
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("kernel line needs alpha > 0, got {alpha}")));
    }
    let mut rep = scan_modulus(
        |tau| h.mellin(Complex64::new(alpha, tau[0])),
        &[alpha],
        &[radius],
        resolution,
        h.is_analytic(),
    )?;
    rep.analytic = h.is_analytic() && rep.min_modulus > 0.0;
    Ok(rep)
}

/// `xi_1, ..., xi_n, |K|` rows over the scan lattice, for external plotting.
pub fn modulus_heatmap_csv(q: &CostExpr, c: &[f64], radius: f64, resolution: usize) -> Result<String> {
    if c.len() != q.dim() || resolution < 2 {
        return Err(Error::Argument("heatmap needs a matching plane and at least 2 nodes".into()));
    }
    let lat = Lattice {
        radius: vec![radius; q.dim()],
        res: resolution,
    };
    let n = q.dim();
    let rows: Vec<String> = (0..lat.len())
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0; n];
            lat.unravel(flat, &mut idx);
            let xi: Vec<f64> = (0..n).map(|i| lat.coord(i, idx[i])).collect();
            let m = mellin_expcost_closed(q, &plane_point(c, &xi))?.norm();
            let cols: Vec<String> = xi.iter().map(|v| v.to_string()).chain([format!("{m:e}")]).collect();
            Ok(cols.join(","))
        })
        .collect::<Result<_>>()?;
    let header: Vec<String> = (1..=n).map(|i| format!("xi{i}")).chain(["modulus".into()]).collect();
    Ok(format!("{}\n{}\n", header.join(","), rows.join("\n")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InjectiveCertified,
    InjectiveNumerical,
    NotInjectiveNumerical,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub r: NormOrder,
    pub operator: &'static str,
    pub verdict: Verdict,
    pub cost_scan: ZeroScanReport,
    /// Scan of `Mh` on `Re s = alpha`, for `R^h_q` only.
    pub kernel_scan: Option<ZeroScanReport>,
}

#[derive(Clone, Copy, Debug)]
pub struct ScanSettings {
    pub radius: f64,
    pub resolution: usize,
    pub kernel_radius: f64,
    pub kernel_resolution: usize,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            radius: 20.0,
            resolution: 64,
            kernel_radius: 40.0,
            kernel_resolution: 256,
        }
    }
}

fn scan_verdict(rep: &ZeroScanReport, r: NormOrder) -> Verdict {
    if rep.analytic {
        return Verdict::InjectiveCertified;
    }
    match (rep.classification, r) {
        (ZeroClass::NoZeroDetected, _) => Verdict::InjectiveNumerical,
        (ZeroClass::IsolatedZeros, NormOrder::Infinity) => Verdict::NotInjectiveNumerical,
        (ZeroClass::IsolatedZeros, _) => Verdict::InjectiveNumerical,
        (ZeroClass::ZeroRegion, _) => Verdict::NotInjectiveNumerical,
    }
}

fn combine(a: Verdict, b: Verdict) -> Verdict {
    use Verdict::*;
    match (a, b) {
        (NotInjectiveNumerical, _) | (_, NotInjectiveNumerical) => NotInjectiveNumerical,
        (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
        (InjectiveCertified, InjectiveCertified) => InjectiveCertified,
        _ => InjectiveNumerical,
    }
}

/// Verdict on injectivity of `op` in `L^r_{I-c}`.
///
/// `Pi_q` inherits the `R_q` verdict: the profit kernel transform
/// `p0^{s+1} / (s (s+1))` has no zeros for `Re s > 0`.
pub fn injectivity_report(
    op: &Operator,
    q: &CostExpr,
    c: &[f64],
    r: NormOrder,
    settings: &ScanSettings,
) -> Result<InjectivityReport> {
    let cost_scan = zero_scan(q, c, settings.radius, settings.resolution)?;
    let base = scan_verdict(&cost_scan, r);
    let (verdict, kernel_scan) = match op {
        Operator::Radon | Operator::Profit { .. } => (base, None),
        Operator::Kernel { kernel } => {
            let alpha: f64 = c.iter().sum();
            match kernel_zero_scan(kernel, alpha, settings.kernel_radius, settings.kernel_resolution) {
                Ok(ks) => (combine(base, scan_verdict(&ks, r)), Some(ks)),
                Err(Error::Integrability(_)) => (Verdict::Inconclusive, None),
                Err(e) => return Err(e),
            }
        }
    };
    Ok(InjectivityReport {
        r,
        operator: op.label(),
        verdict,
        cost_scan,
        kernel_scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nested() -> CostExpr {
        CostExpr::parse(
            "(ces :alpha 0.6 :C 1.3 :a (0.4 0.6) (axis 1) (ces :alpha 0.5 :C 0.8 :a (0.3 0.7) (axis 2) (ces :alpha 0.9 :C 1 :a (0.5 0.5) (axis 3) (axis 4))))",
        )
        .unwrap()
    }

    #[test]
    fn ces_scan_is_certified() {
        let q = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5]).unwrap();
        let rep = zero_scan(&q, &[1.0, 1.0], 20.0, 128).unwrap();
        assert!(rep.analytic && rep.min_modulus > 0.0);
        assert_eq!(rep.classification, ZeroClass::NoZeroDetected);
    }

    #[test]
    fn manufactured_zero_is_located() {
        let q = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5]).unwrap();
        let c = [1.0, 1.0];
        let root = Complex64::new(1.0, 5.0);
        let rep = scan_modulus(
            |xi| {
                let z = plane_point(&c, xi);
                Ok(mellin_expcost_closed(&q, &z)? * (z[0] - root) / (z[0] - root + 1.0))
            },
            &c,
            &[20.0, 20.0],
            128,
            false,
        )
        .unwrap();
        assert_eq!(rep.classification, ZeroClass::IsolatedZeros);
        let h = rep.spacing[0];
        assert!(rep.candidates.iter().all(|z| (z.lattice_xi[0] - 5.0).abs() <= h), "{:?}", rep.candidates[0]);
        assert!(rep.candidates.iter().all(|z| (z.xi[0] - 5.0).abs() < 1e-6));
    }

    #[test]
    fn two_exponential_kernel_zero_at_one() {
        let rep = kernel_zero_scan(&KernelSpec::two_exponential(), 1.0, 10.0, 256).unwrap();
        assert!(!rep.analytic);
        let h = rep.spacing[0];
        let z = rep.candidates.iter().find(|z| z.xi[0].abs() <= h).expect("zero at tau = 0");
        assert!(z.lattice_xi[0].abs() <= h);
        // Zeros at 2 pi k as well.
        assert!(rep.candidates.iter().any(|z| (z.xi[0] - 2.0 * std::f64::consts::PI).abs() < h));
    }

    #[test]
    fn analytic_kernels_have_no_zeros() {
        for h in [KernelSpec::Profit { p0: 1.0 }, KernelSpec::Exponential] {
            let rep = kernel_zero_scan(&h, 2.0, 40.0, 256).unwrap();
            assert!(rep.analytic && rep.candidates.is_empty(), "{h:?}");
        }
    }

    #[test]
    fn verdicts() {
        let q = nested();
        let c = [0.5, 0.7, 0.4, 0.6];
        let s = ScanSettings {
            resolution: 16,
            ..ScanSettings::default()
        };
        for r in NormOrder::ALL {
            let radon = injectivity_report(&Operator::Radon, &q, &c, r, &s).unwrap();
            let profit = injectivity_report(&Operator::Profit { p0: 1.0 }, &q, &c, r, &s).unwrap();
            assert_eq!(radon.verdict, Verdict::InjectiveCertified);
            assert_eq!(profit.verdict, radon.verdict);
        }
        let q2 = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5]).unwrap();
        let op = Operator::Kernel {
            kernel: KernelSpec::two_exponential(),
        };
        let s = ScanSettings::default();
        let rep = injectivity_report(&op, &q2, &[0.5, 0.5], NormOrder::Infinity, &s).unwrap();
        assert_eq!(rep.verdict, Verdict::NotInjectiveNumerical);
        let rep = injectivity_report(&op, &q2, &[0.5, 0.5], NormOrder::Two, &s).unwrap();
        assert_eq!(rep.verdict, Verdict::InjectiveNumerical);
    }

    #[test]
    fn heatmap_has_one_row_per_node() {
        let q = CostExpr::flat_ces(1.0, 1.0, vec![0.5, 0.5]).unwrap();
        let csv = modulus_heatmap_csv(&q, &[1.0, 1.0], 5.0, 8).unwrap();
        assert_eq!(csv.lines().count(), 65);
        assert!(csv.starts_with("xi1,xi2,modulus"));
    }
}
