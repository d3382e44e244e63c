//! Residuals of the Mellin identities behind the uniqueness argument:
//! projection for `R_q` and `Pi_q`, the coarea reduction, kernel
//! factorization and the operator-norm estimates.

use mellin_radon::mellin_engine::{GridFunction, KernelSpec, LogGrid};
use mellin_radon::transforms::{
    coarea_check, factorization_check, prop1_check_orders, projection_check, NormOrder, Operator,
};
use mellin_radon::CostExpr;
use num_complex::Complex64;

fn main() -> mellin_radon::Result<()> {
    let q = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5])?;
    let f = GridFunction::from_fn(LogGrid::cube(2, -12.0, 16.0, 256)?, |x| {
        x[0] * x[0] * x[1] * x[1] * (-x[0] - x[1]).exp()
    })?;
    // R_q f decays slowly as p -> 0, so the check runs well inside the strip.
    let c = [0.9, 0.9];
    for op in [Operator::Radon, Operator::Profit { p0: 1.0 }] {
        let rep = projection_check(&f, &q, &op, &c, 12, 3.0)?;
        println!("projection {}: max residual {:.2e} over {} frequencies", rep.operator, rep.max_residual, rep.points.len());
    }

    let coarse = GridFunction::from_fn(LogGrid::cube(2, -12.0, 8.0, 128)?, |x| (-x[0] - 2.0 * x[1]).exp())?;
    println!("coarea at p = (1, 2): {:.2e}", coarea_check(&coarse, &q, &[1.0, 2.0], 512)?);

    let z = [Complex64::new(0.4, 1.0), Complex64::new(0.5, -0.5)];
    for h in [KernelSpec::Exponential, KernelSpec::Profit { p0: 1.5 }] {
        let rep = factorization_check(&q, &h, &[1.3, 0.7], &z, 1200)?;
        println!("factorization {h:?}: {:.2e}", rep.residual);
    }

    let reports = prop1_check_orders(&coarse, &q, Some(&KernelSpec::Exponential), 1.0, &NormOrder::ALL, &[0.5, 0.5])?;
    for rep in reports {
        for line in &rep.lines {
            println!("r = {:>3} {:<5} {:.4e} <= {:.4e}", rep.r.label(), line.name, line.lhs, line.rhs);
        }
    }
    Ok(())
}
