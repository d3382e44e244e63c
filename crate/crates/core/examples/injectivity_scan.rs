//! Zero scans of `M e^{-q}` and `Mh` and the resulting injectivity verdicts.

use mellin_radon::diagnostics::{injectivity_report, kernel_zero_scan, zero_scan, ScanSettings};
use mellin_radon::mellin_engine::KernelSpec;
use mellin_radon::transforms::{NormOrder, Operator};
use mellin_radon::CostExpr;

fn main() -> mellin_radon::Result<()> {
    let nested = CostExpr::parse(
        "(ces :alpha 0.6 :C 1.3 :a (0.4 0.6) (axis 1) (ces :alpha 0.5 :C 0.8 :a (0.3 0.7) (axis 2) (axis 3)))",
    )?;
    let scan = zero_scan(&nested, &[0.5, 0.7, 0.4], 20.0, 16)?;
    println!(
        "nested CES: min |K| {:.3e}, classification {:?}, analytic {}",
        scan.min_modulus, scan.classification, scan.analytic
    );

    let h = KernelSpec::two_exponential();
    let ks = kernel_zero_scan(&h, 1.0, 20.0, 512)?;
    println!("two-exponential kernel on Re s = 1: {:?}", ks.classification);
    for z in &ks.candidates {
        println!("  zero near Im s = {:+.5} (2 pi multiple {:+.4})", z.xi[0], z.xi[0] / std::f64::consts::TAU);
    }

    let flat = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5])?;
    let settings = ScanSettings::default();
    for op in [Operator::Radon, Operator::Profit { p0: 1.0 }, Operator::Kernel { kernel: h }] {
        for r in NormOrder::ALL {
            let rep = injectivity_report(&op, &flat, &[0.5, 0.5], r, &settings)?;
            println!("{:<6} r = {:<3} {:?}", rep.operator, r.label(), rep.verdict);
        }
    }
    Ok(())
}
