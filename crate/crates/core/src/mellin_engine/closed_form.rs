//! Mellin transform of `e^{-q}` for CES cost trees, evaluated in log space.
//!
//! A flat node `C (sum a_j u_j^alpha)^{1/alpha}` over arguments with exponents
//! `zeta_j` contributes
//! `Gamma(s) / (alpha^{k-1} C^s Gamma(s/alpha)) prod a_j^{-zeta_j/alpha} Gamma(zeta_j/alpha)`
//! with `s = sum zeta_j`. A subtree argument has `zeta = ` the sum of its
//! axis exponents and contributes its own transform divided by `Gamma(zeta)`.

use num_complex::Complex64;

use super::gamma::ln_gamma;
use crate::cost_model::{CostExpr, Node};
use crate::error::{Error, Result};

/// Returns `(ln M, s)` for the subtree.
fn node_ln(node: &Node, z: &[Complex64]) -> Result<(Complex64, Complex64)> {
    let ces = match node {
        Node::Axis(i) => return Ok((Complex64::default(), z[*i])),
        Node::Ces(c) => c,
    };
    let alpha = ces.alpha();
    let k = ces.weights().len() as f64;
    let mut acc = Complex64::default();
    let mut s = Complex64::default();
    for (a, child) in ces.weights().iter().zip(ces.children()) {
        let (child_ln, zeta) = node_ln(child, z)?;
        if let Node::Ces(_) = child {
            acc += child_ln - ln_gamma(zeta)?;
        }
        acc += -zeta / alpha * a.ln() + ln_gamma(zeta / alpha)?;
        s += zeta;
    }
    acc += ln_gamma(s)? - (k - 1.0) * alpha.ln() - s * ces.scale().ln() - ln_gamma(s / alpha)?;
    Ok((acc, s))
}

/// `ln (M e^{-q})(z)`, branch of the imaginary part unspecified.
pub fn ln_mellin_expcost(q: &CostExpr, z: &[Complex64]) -> Result<Complex64> {
    if z.len() != q.dim() {
        return Err(Error::Shape(format!("expected {} exponents, got {}", q.dim(), z.len())));
    }
    if let Some((i, zi)) = z.iter().enumerate().find(|(_, v)| !(v.re > 0.0)) {
        return Err(Error::Domain(format!(
            "exponent {} has Re z = {} outside the half-space Re z > 0",
            i + 1,
            zi.re
        )));
    }
    Ok(node_ln(q.root(), z)?.0)
}

/// `(M e^{-q})(z) = int x^{z - 1} e^{-q(x)} dx` for `Re z > 0`.
pub fn mellin_expcost_closed(q: &CostExpr, z: &[Complex64]) -> Result<Complex64> {
    ln_mellin_expcost(q, z).map(|v| v.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mellin_engine::gamma::gamma;
    use crate::mellin_engine::quadrature::{mellin_quadrature, QuadratureBox};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn linear_cost_factorizes() {
        // e^{-(a1 x1 + a2 x2)}: prod Gamma(z_j) a_j^{-z_j}.
        let q = CostExpr::linear(1.0, vec![0.25, 0.75]).unwrap();
        let z = [c(0.7, 1.0), c(1.3, -2.0)];
        let v = mellin_expcost_closed(&q, &z).unwrap();
        let exact = gamma(z[0]).unwrap() * (-z[0] * 0.25f64.ln()).exp()
            * gamma(z[1]).unwrap()
            * (-z[1] * 0.75f64.ln()).exp();
        assert!((v - exact).norm() < 1e-12 * exact.norm());
    }

    #[test]
    fn half_ces_at_unit_point() {
        // Independent reduction: Gamma(2)/(0.5 Gamma(4)) * (0.5^-2 Gamma(2))^2 = 16/3.
        let q = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5]).unwrap();
        let v = mellin_expcost_closed(&q, &[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((v.re - 16.0 / 3.0).abs() < 1e-12 && v.im.abs() < 1e-12, "{v}");
    }

    #[test]
    fn nested_tree_matches_quadrature() {
        let q = CostExpr::parse(
            "(ces :alpha 0.6 :C 1.3 :a (0.4 0.6) (axis 1) (ces :alpha 0.5 :C 0.8 :a (0.3 0.7) (axis 2) (axis 3)))",
        )
        .unwrap();
        let z = [c(0.9, 0.4), c(1.1, -0.3), c(0.8, 0.2)];
        let closed = mellin_expcost_closed(&q, &z).unwrap();
        let b = QuadratureBox::cube(3, -45.0, 7.0, 200);
        let quad = mellin_quadrature(|x| (-q.value(x)).exp(), &z, &b).unwrap();
        assert!((closed - quad).norm() < 1e-6 * closed.norm(), "{closed} {quad}");
    }

    #[test]
    fn rejects_left_half_plane() {
        let q = CostExpr::flat_ces(0.5, 1.0, vec![0.5, 0.5]).unwrap();
        assert!(mellin_expcost_closed(&q, &[c(-0.1, 0.0), c(1.0, 0.0)]).is_err());
    }
}
