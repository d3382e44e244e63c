//! Extended-precision trapezoid values of `int x^{z-1} e^{-q(x)} dx` for flat
//! two-axis CES costs, written as the frozen oracle table used by the
//! closed-form checks. Needs system GMP and MPFR.
//!
//! Usage: `ces-oracle [dy] [lower] > table.csv`

use mellin_radon::transforms::ball_frequencies;
use rug::ops::Pow;
use rug::Float;

const PREC: u32 = 160;
const ALPHAS: [f64; 3] = [0.25, 0.5, 1.0];
const WEIGHTS: [f64; 2] = [0.5, 0.5];
const UPPER: f64 = 8.5;

fn f(v: f64) -> Float {
    Float::with_val(PREC, v)
}

fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("numeric argument")).collect();
    let dy = args.first().copied().unwrap_or(0.08);
    let lower = args.get(1).copied().unwrap_or(-90.0);
    let m = ((UPPER - lower) / dy).round() as usize + 1;
    let h = f(UPPER - lower) / (m as f64 - 1.0);
    let ys: Vec<Float> = (0..m).map(|k| f(lower) + h.clone() * k as f64).collect();
    let w: Vec<Float> = (0..m)
        .map(|k| if k == 0 || k == m - 1 { h.clone() / 2 } else { h.clone() })
        .collect();
    let xis = ball_frequencies(2, 20, 10.0, 1);
    // cos and sin of xi_j y_k, per point and axis.
    let phase: Vec<[Vec<(Float, Float)>; 2]> = xis
        .iter()
        .map(|xi| {
            [0, 1].map(|j| {
                ys.iter()
                    .map(|y| {
                        let t = y.clone() * xi[j];
                        (t.clone().cos(), t.sin())
                    })
                    .collect()
            })
        })
        .collect();
    println!("# dy = {dy}, box = [{lower}, {UPPER}]^2, {PREC}-bit trapezoid, weights = 0.5 0.5, C = 1, c = 1 1");
    println!("alpha,xi1,xi2,re,im");
    for alpha in ALPHAS {
        let inv = (1.0 / alpha).round() as u32;
        assert!((inv as f64 - 1.0 / alpha).abs() < 1e-12, "1/alpha must be an integer");
        let u: Vec<[Float; 2]> = ys.iter().map(|y| [0, 1].map(|j| (y.clone() * alpha).exp() * WEIGHTS[j])).collect();
        let mut acc = vec![(f(0.0), f(0.0)); xis.len()];
        for k1 in 0..m {
            let row: Vec<Float> = (0..m)
                .map(|k2| {
                    let q = (u[k1][0].clone() + &u[k2][1]).pow(inv);
                    (ys[k1].clone() + &ys[k2] - q).exp() * &w[k2]
                })
                .collect();
            for (p, a) in acc.iter_mut().enumerate() {
                let (mut re, mut im) = (f(0.0), f(0.0));
                for (k2, v) in row.iter().enumerate() {
                    let (c, s) = &phase[p][1][k2];
                    re += v.clone() * c;
                    im += v.clone() * s;
                }
                let (c, s) = &phase[p][0][k1];
                let wr = w[k1].clone();
                a.0 += (re.clone() * c - im.clone() * s) * &wr;
                a.1 += (re * s + im * c) * &wr;
            }
        }
        for (xi, a) in xis.iter().zip(&acc) {
            println!(
                "{alpha},{:.17e},{:.17e},{:.20e},{:.20e}",
                xi[0],
                xi[1],
                a.0.to_f64(),
                a.1.to_f64()
            );
        }
        eprintln!("alpha {alpha} done");
    }
}
