//! `R_q`, `R^h_q` with `h = e^{-t}` and `Pi_q` on one scene, with the value
//! `(R_q f)(I) = 4 e^{-2}` for `q = (x1 + x2) / 2` and `f = e^{-x1-x2}`
//! reproduced by three independent schemes.

use mellin_radon::mellin_engine::{GridFunction, KernelSpec, LogGrid};
use mellin_radon::transforms::{
    default_p_grid, profit_grid, radon_forward, radon_grid, rhq_grid, RadonOptions, RadonScheme,
};
use mellin_radon::CostExpr;

fn main() -> mellin_radon::Result<()> {
    let q = CostExpr::linear(1.0, vec![0.5, 0.5])?;
    let f = GridFunction::from_fn(LogGrid::cube(2, -10.0, 4.0, 512)?, |x| (-x[0] - x[1]).exp())?;
    let exact = 4.0 * (-2.0f64).exp();
    for scheme in [RadonScheme::VolumeDifference, RadonScheme::LevelCurve, RadonScheme::Simplex] {
        let v = radon_forward(&f, &q, &[1.0, 1.0], &RadonOptions::scheme(scheme))?;
        println!("{scheme:?}: {v:.8} (rel err {:.2e})", (v - exact).abs() / exact);
    }

    let coarse = GridFunction::from_fn(LogGrid::cube(2, -10.0, 4.0, 128)?, |x| (-x[0] - x[1]).exp())?;
    let pg = default_p_grid(coarse.grid());
    let r = radon_grid(&coarse, &q, &pg)?;
    let h = rhq_grid(&coarse, &q, &KernelSpec::Exponential, &pg)?;
    let pi = profit_grid(&coarse, &q, 1.0, &pg)?;
    for (name, g) in [("R_q f", &r), ("R^h_q f", &h), ("Pi_q f", &pi)] {
        println!("{name:>8} at p = I: {:.6}", g.sample(&[1.0, 1.0]));
    }
    Ok(())
}
