//! Direct Mellin integrals of black-box functions at arbitrary complex points.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Tensor trapezoid box in log-coordinates.
#[derive(Clone, Debug)]
pub struct QuadratureBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: Vec<usize>,
    /// Largest allowed `max_face |g| / max |g|` of the weighted integrand.
    pub face_tolerance: f64,
}

impl QuadratureBox {
    pub fn cube(dim: usize, lower: f64, upper: f64, points: usize) -> Self {
        Self {
            lower: vec![lower; dim],
            upper: vec![upper; dim],
            points: vec![points; dim],
            face_tolerance: 1e-7,
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.upper.len() != n || self.points.len() != n || n == 0 {
            return Err(Error::Shape("quadrature box components disagree".into()));
        }
        for i in 0..n {
            if !(self.upper[i] > self.lower[i]) || self.points[i] < 3 {
                return Err(Error::Structure(format!("degenerate quadrature axis {}", i + 1)));
            }
        }
        Ok(())
    }
}

/// `int x^{z - 1} f(x) dx` for each `z` in `zs`, sharing one pass over `f`.
///
/// Fails with `NonConvergence` when the weighted integrand has not decayed
/// at the faces of the box, which signals `z` outside the strip.
pub fn mellin_quadrature_many<F>(f: F, zs: &[Vec<Complex64>], qbox: &QuadratureBox) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    qbox.validate()?;
    let n = qbox.dim();
    if let Some(z) = zs.iter().find(|z| z.len() != n) {
        return Err(Error::Shape(format!("point of length {} in a {n}-dimensional box", z.len())));
    }
    let nodes: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let m = qbox.points[i];
            let h = (qbox.upper[i] - qbox.lower[i]) / (m - 1) as f64;
            (0..m).map(|k| qbox.lower[i] + k as f64 * h).collect()
        })
        .collect();
    // Per-axis tables w_k e^{z_i y_k}, trapezoid end weights included.
    let tables: Vec<Vec<Vec<Complex64>>> = zs
        .iter()
        .map(|z| {
            (0..n)
                .map(|i| {
                    let m = nodes[i].len();
                    let h = nodes[i][1] - nodes[i][0];
                    nodes[i]
                        .iter()
                        .enumerate()
                        .map(|(k, y)| {
                            let w = if k == 0 || k == m - 1 { 0.5 * h } else { h };
                            (z[i] * *y).exp() * w
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let magnitudes: Vec<Vec<Vec<f64>>> = zs
        .iter()
        .map(|z| {
            (0..n)
                .map(|i| nodes[i].iter().map(|y| (z[i].re * y).exp()).collect())
                .collect()
        })
        .collect();
    let total: usize = qbox.points.iter().product();
    let rows = qbox.points[0];
    let per_row = total / rows;

    struct Partial {
        sums: Vec<Complex64>,
        abs_max: Vec<f64>,
        face_max: Vec<f64>,
    }

    let partials: Vec<Partial> = (0..rows)
        .into_par_iter()
        .map(|r| {
            let mut sums = vec![Complex64::default(); zs.len()];
            let mut abs_max = vec![0.0f64; zs.len()];
            let mut face_max = vec![0.0f64; zs.len()];
            let mut idx = vec![0usize; n];
            let mut x = vec![0.0; n];
            for j in 0..per_row {
                idx[0] = r;
                let mut rem = j;
                for i in (1..n).rev() {
                    idx[i] = rem % qbox.points[i];
                    rem /= qbox.points[i];
                }
                let on_face = idx.iter().zip(&qbox.points).any(|(k, m)| *k == 0 || *k == m - 1);
                for i in 0..n {
                    x[i] = nodes[i][idx[i]].exp();
                }
                let v = f(&x);
                if v == 0.0 {
                    continue;
                }
                for (q, t) in tables.iter().enumerate() {
                    let mut w = Complex64::new(v, 0.0);
                    let mut mag = v.abs();
                    for i in 0..n {
                        w *= t[i][idx[i]];
                        mag *= magnitudes[q][i][idx[i]];
                    }
                    sums[q] += w;
                    abs_max[q] = abs_max[q].max(mag);
                    if on_face {
                        face_max[q] = face_max[q].max(mag);
                    }
                }
            }
            Partial { sums, abs_max, face_max }
        })
        .collect();

    let mut out = Vec::with_capacity(zs.len());
    for q in 0..zs.len() {
        let mut s = Complex64::default();
        let mut amax: f64 = 0.0;
        let mut fmax: f64 = 0.0;
        for p in &partials {
            s += p.sums[q];
            amax = amax.max(p.abs_max[q]);
            fmax = fmax.max(p.face_max[q]);
        }
        if !(s.re.is_finite() && s.im.is_finite()) {
            return Err(Error::NonConvergence(format!("integral at {:?} is not finite", zs[q])));
        }
        if amax > 0.0 && fmax > qbox.face_tolerance * amax {
            return Err(Error::NonConvergence(format!(
                "weighted integrand at {:?} has not decayed at the box faces (ratio {:.3e})",
                zs[q],
                fmax / amax
            )));
        }
        out.push(s);
    }
    Ok(out)
}

pub fn mellin_quadrature<F>(f: F, z: &[Complex64], qbox: &QuadratureBox) -> Result<Complex64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    Ok(mellin_quadrature_many(f, &[z.to_vec()], qbox)?[0])
}
