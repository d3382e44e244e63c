//! Recovers `f` from `R_q f` by Mellin deconvolution and shows the
//! regularization trade-off: too large an `epsilon` biases, too small
//! amplifies discretization error where `|M e^{-q}|` is tiny.

use mellin_radon::inversion::{invert_radon, InversionOptions};
use mellin_radon::transforms::{Operator, Synthetic};
use mellin_radon::mellin_engine::LogGrid;
use mellin_radon::CostExpr;

fn main() -> mellin_radon::Result<()> {
    let q = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5])?;
    let f = Synthetic::GammaProduct { shapes: vec![2.0, 2.0], rates: vec![1.0, 1.0] };
    let truth = f.sample(LogGrid::cube(2, -12.0, 16.0, 256)?)?;
    let g = Operator::Radon.apply_grid(&truth, &q)?;
    println!("{:>8} {:>14} {:>12}", "epsilon", "interior err", "min |K|");
    for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
        let inv = invert_radon(&g, &q, &InversionOptions::new(vec![0.9, 0.9], eps)?)?.with_truth(&truth)?;
        println!(
            "{eps:>8.0e} {:>14.3e} {:>12.3e}",
            inv.report.interior_l2_error.unwrap_or(f64::NAN),
            inv.report.min_abs_k
        );
    }
    Ok(())
}
