//! Inversion of `Pi_q` and of `R^h_q` for a kernel whose Mellin transform
//! vanishes on `Re s = 1`. The report flags the frequency bands where the
//! data carry no information about `f`.

use mellin_radon::inversion::{invert_kernel, invert_profit, InversionOptions};
use mellin_radon::mellin_engine::{KernelSpec, LogGrid};
use mellin_radon::transforms::{Operator, Synthetic};
use mellin_radon::CostExpr;

fn main() -> mellin_radon::Result<()> {
    let q = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5])?;
    let truth = Synthetic::GammaProduct { shapes: vec![2.0, 2.0], rates: vec![1.0, 1.0] }
        .sample(LogGrid::cube(2, -12.0, 16.0, 256)?)?;

    let pi = Operator::Profit { p0: 1.0 }.apply_grid(&truth, &q)?;
    let inv = invert_profit(&pi, 1.0, &q, &InversionOptions::new(vec![0.9, 0.9], 1e-6)?)?.with_truth(&truth)?;
    println!("profit inversion: interior error {:.3e}", inv.report.interior_l2_error.unwrap_or(f64::NAN));

    let h = KernelSpec::two_exponential();
    let gh = Operator::Kernel { kernel: h.clone() }.apply_grid(&truth, &q)?;
    // Re s = c1 + c2 = 1 puts the plane on the zeros of Mh.
    let inv = invert_kernel(&gh, &q, &h, &InversionOptions::new(vec![0.5, 0.5], 1e-6)?)?;
    println!("two-exponential kernel: {} flagged bands", inv.report.flagged_zero_bands.len());
    for band in &inv.report.flagged_zero_bands {
        println!("  Im s in [{:+.4}, {:+.4}] around {:+.4}", band.lower, band.upper, band.center);
    }
    Ok(())
}
