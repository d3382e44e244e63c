use num_complex::Complex64;
use rustfft::FftDirection;

use crate::mellin_engine::fft_nd;

fn embed(src: &[f64], shape: &[usize], padded: &[usize]) -> Vec<Complex64> {
    let total: usize = padded.iter().product();
    let mut out = vec![Complex64::default(); total];
    let n = shape.len();
    let mut idx = vec![0usize; n];
    for (k, v) in src.iter().enumerate() {
        let mut rem = k;
        for i in (0..n).rev() {
            idx[i] = rem % shape[i];
            rem /= shape[i];
        }
        let flat = idx.iter().zip(padded).fold(0, |acc, (j, m)| acc * m + j);
        out[flat] = Complex64::new(*v, 0.0);
    }
    out
}

/// `out_k = sum_i a_i b_{i+k}` for `k` in `out_shape`, `i` in `a_shape`.
///
/// `b` has shape `a_shape + out_shape - 1` per axis.
pub(crate) fn correlate(a: &[f64], a_shape: &[usize], b: &[f64], out_shape: &[usize]) -> Vec<f64> {
    let b_shape: Vec<usize> = a_shape.iter().zip(out_shape).map(|(x, y)| x + y - 1).collect();
    debug_assert_eq!(b.len(), b_shape.iter().product::<usize>());
    let padded: Vec<usize> = b_shape.iter().map(|m| m.next_power_of_two()).collect();
    let mut fa = embed(a, a_shape, &padded);
    let mut fb = embed(b, &b_shape, &padded);
    fft_nd(&mut fa, &padded, FftDirection::Forward);
    fft_nd(&mut fb, &padded, FftDirection::Forward);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = x.conj() * y;
    }
    fft_nd(&mut fa, &padded, FftDirection::Inverse);
    let norm = 1.0 / fa.len() as f64;
    let n = a_shape.len();
    let total: usize = out_shape.iter().product();
    let mut idx = vec![0usize; n];
    (0..total)
        .map(|k| {
            let mut rem = k;
            for i in (0..n).rev() {
                idx[i] = rem % out_shape[i];
                rem /= out_shape[i];
            }
            let flat = idx.iter().zip(&padded).fold(0, |acc, (j, m)| acc * m + j);
            fa[flat].re * norm
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum() {
        let a_shape = [3, 4];
        let out_shape = [2, 3];
        let b_shape = [4, 6];
        let a: Vec<f64> = (0..12).map(|k| (k as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..24).map(|k| (k as f64 * 0.3).cos()).collect();
        let got = correlate(&a, &a_shape, &b, &out_shape);
        for k0 in 0..2 {
            for k1 in 0..3 {
                let mut s = 0.0;
                for i0 in 0..3 {
                    for i1 in 0..4 {
                        s += a[i0 * 4 + i1] * b[(i0 + k0) * b_shape[1] + i1 + k1];
                    }
                }
                assert!((got[k0 * 3 + k1] - s).abs() < 1e-12);
            }
        }
    }
}
