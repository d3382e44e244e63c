//! `M e^{-q}` of a nested CES cost as a product of Gamma values, against
//! tensor trapezoid quadrature in log coordinates.

use mellin_radon::mellin_engine::{mellin_expcost_closed, mellin_quadrature_many, QuadratureBox};
use mellin_radon::CostExpr;
use num_complex::Complex64;

fn main() -> mellin_radon::Result<()> {
    let q = CostExpr::parse(
        "(ces :alpha 0.7 :C 1.2 :a (0.4 0.6)
           (axis 1)
           (ces :alpha 0.9 :C 1 :a (0.5 0.5) (axis 2) (axis 3)))",
    )?;
    let zs: Vec<Vec<Complex64>> = [[0.0, 0.0, 0.0], [1.0, -0.5, 2.0], [-2.0, 1.5, 0.5]]
        .iter()
        .map(|xi| xi.iter().zip([0.6, 0.8, 0.7]).map(|(t, c)| Complex64::new(c, *t)).collect())
        .collect();
    // Along an axis q grows only like C a^(1/alpha) x, so the box reaches
    // well past x = e^4; below, the weight x^c sets the left edge.
    let qbox = QuadratureBox::cube(3, -40.0, 5.5, 220);
    let numeric = mellin_quadrature_many(|x| (-q.value(x)).exp(), &zs, &qbox)?;
    for (z, num) in zs.iter().zip(numeric) {
        let closed = mellin_expcost_closed(&q, z)?;
        println!(
            "z = {:?}\n  closed {closed:.10}\n  quadrature {num:.10}\n  rel diff {:.2e}",
            z.iter().map(|v| (v.re, v.im)).collect::<Vec<_>>(),
            (closed - num).norm() / closed.norm()
        );
    }
    Ok(())
}
