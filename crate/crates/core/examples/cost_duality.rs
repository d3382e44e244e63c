//! Unit cost of a CES production function by duality, checked against the
//! dual CES cost in closed form.
//!
//! `F0 = (sum b_j y_j^rho)^(1/rho)` has cost `(sum b_j^(1/(1-rho)) x_j^r)^(1/r)`
//! with `r = rho / (rho - 1)`.

use mellin_radon::cost_model::{cost_from_production, validate_cost, DualityOptions, ProductionSpec};
use mellin_radon::CostExpr;

fn main() -> mellin_radon::Result<()> {
    let (rho, b) = (-1.0, vec![0.3, 0.7]);
    let f0 = ProductionSpec::Ces { rho, weights: b.clone() };
    let r = rho / (rho - 1.0);
    let w: Vec<f64> = b.iter().map(|v: &f64| v.powf(1.0 / (1.0 - rho))).collect();
    let total: f64 = w.iter().sum();
    let q = CostExpr::flat_ces(r, total.powf(1.0 / r), w.iter().map(|v| v / total).collect())?;
    println!("dual cost: {}", q.digest());

    println!("{:>14} {:>14} {:>14} {:>10}", "x", "by duality", "closed form", "rel diff");
    for x in [[1.0, 1.0], [0.2, 3.0], [5.0, 0.5], [0.01, 0.02]] {
        let dual = cost_from_production(&f0, &x, DualityOptions::for_dim(2))?;
        let exact = q.eval(&x)?;
        println!(
            "{:>14} {dual:>14.8} {exact:>14.8} {:>10.2e}",
            format!("{x:?}"),
            (dual - exact).abs() / exact
        );
    }

    let report = validate_cost(&q, 256);
    println!("validation passed: {}", report.passed(1e-10));
    Ok(())
}
