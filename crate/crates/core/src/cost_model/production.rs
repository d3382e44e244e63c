//! Unit cost from a micro-level production function by duality:
//! `q(x) = inf { x.y / F0(y) : F0(y) > 0 }`, reduced to the unit simplex by
//! homogeneity of `F0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProductionSpec {
    /// `(sum b_j y_j^rho)^(1/rho)`, `rho <= 1`, `rho != 0`.
    Ces { rho: f64, weights: Vec<f64> },
    /// `min_j y_j / b_j`.
    Leontief { weights: Vec<f64> },
    /// `sum_j b_j y_j`.
    Linear { weights: Vec<f64> },
}

impl ProductionSpec {
    pub fn weights(&self) -> &[f64] {
        match self {
            ProductionSpec::Ces { weights, .. }
            | ProductionSpec::Leontief { weights }
            | ProductionSpec::Linear { weights } => weights,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights().len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() < 2 {
            return Err(Error::Structure("production needs at least two inputs".into()));
        }
        if self.weights().iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::Structure("production weights must be positive".into()));
        }
        if let ProductionSpec::Ces { rho, .. } = self {
            if !(rho.is_finite() && *rho <= 1.0 && *rho != 0.0) {
                return Err(Error::Structure(format!(
                    "CES production needs rho <= 1 and rho != 0, got {rho}"
                )));
            }
        }
        Ok(())
    }

    /// `F0(y)` for `y` in the closed orthant; zero where the limit vanishes.
    pub fn output(&self, y: &[f64]) -> f64 {
        match self {
            ProductionSpec::Linear { weights } => weights.iter().zip(y).map(|(b, v)| b * v).sum(),
            ProductionSpec::Leontief { weights } => weights
                .iter()
                .zip(y)
                .map(|(b, v)| v / b)
                .fold(f64::INFINITY, f64::min),
            ProductionSpec::Ces { rho, weights } => {
                if *rho < 0.0 && y.iter().any(|v| *v <= 0.0) {
                    return 0.0;
                }
                let s: f64 = weights
                    .iter()
                    .zip(y)
                    .map(|(b, v)| if *v > 0.0 { b * v.powf(*rho) } else { 0.0 })
                    .sum();
                if s <= 0.0 {
                    0.0
                } else {
                    s.powf(1.0 / rho)
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DualityOptions {
    /// Simplex lattice denominator: points `k / resolution`.
    pub resolution: usize,
    /// Number of step halvings in the coordinate-descent refinement.
    pub refinement_steps: usize,
}

impl DualityOptions {
    pub fn for_dim(dim: usize) -> Self {
        let resolution = match dim {
            0..=2 => 10_000,
            3 => 300,
            4 => 60,
            _ => 16,
        };
        Self {
            resolution,
            refinement_steps: 40,
        }
    }
}

fn unit_cost_ratio(f0: &ProductionSpec, x: &[f64], y: &[f64]) -> f64 {
    let out = f0.output(y);
    if out > 0.0 && out.is_finite() {
        x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / out
    } else {
        f64::INFINITY
    }
}

/// Visits lattice compositions of `total` into `parts` in lexicographic order.
fn for_each_composition(parts: usize, total: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(idx: &mut Vec<usize>, parts: usize, left: usize, visit: &mut impl FnMut(&[usize])) {
        if idx.len() + 1 == parts {
            idx.push(left);
            visit(idx);
            idx.pop();
            return;
        }
        for k in 0..=left {
            idx.push(k);
            rec(idx, parts, left - k, visit);
            idx.pop();
        }
    }
    let mut idx = Vec::with_capacity(parts);
    rec(&mut idx, parts, total, visit);
}

pub fn cost_from_production(f0: &ProductionSpec, x: &[f64], opts: DualityOptions) -> Result<f64> {
    f0.validate()?;
    let n = f0.dim();
    if x.len() != n {
        return Err(Error::Shape(format!("expected a {n}-vector, got {}", x.len())));
    }
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain("cost arguments must be positive".into()));
    }
    let res = opts.resolution.max(1);
    let mut best = f64::INFINITY;
    let mut best_idx: Vec<usize> = Vec::new();
    let mut y = vec![0.0; n];
    // Strict improvement keeps the lexicographically smallest minimizer.
    for_each_composition(n, res, &mut |idx| {
        for (yi, k) in y.iter_mut().zip(idx) {
            *yi = *k as f64 / res as f64;
        }
        let v = unit_cost_ratio(f0, x, &y);
        if v < best {
            best = v;
            best_idx = idx.to_vec();
        }
    });
    if !best.is_finite() {
        return Err(Error::DegenerateProduction);
    }

    let mut y: Vec<f64> = best_idx.iter().map(|k| *k as f64 / res as f64).collect();
    let mut step = 1.0 / res as f64;
    for _ in 0..opts.refinement_steps {
        let mut improved = true;
        while improved {
            improved = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j || y[j] <= 0.0 {
                        continue;
                    }
                    let moved = step.min(y[j]);
                    let mut trial = y.clone();
                    trial[i] += moved;
                    trial[j] -= moved;
                    let v = unit_cost_ratio(f0, x, &trial);
                    if v < best {
                        best = v;
                        y = trial;
                        improved = true;
                    }
                }
            }
        }
        step *= 0.5;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain lattice search, no refinement.
    fn brute_force(f0: &ProductionSpec, x: &[f64], res: usize) -> f64 {
        (0..=res)
            .map(|k| {
                let t = k as f64 / res as f64;
                unit_cost_ratio(f0, x, &[t, 1.0 - t])
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn leontief_dual_is_linear() {
        let f0 = ProductionSpec::Leontief { weights: vec![1.0, 1.0] };
        let oracle = brute_force(&f0, &[1.0, 1.0], 10_000);
        assert!((oracle - 2.0).abs() < 1e-12);
        let q = cost_from_production(&f0, &[1.0, 1.0], DualityOptions::for_dim(2)).unwrap();
        assert!((q - 2.0).abs() < 1e-12, "{q}");
    }

    #[test]
    fn linear_dual_is_min() {
        let f0 = ProductionSpec::Linear { weights: vec![1.0, 1.0] };
        let oracle = brute_force(&f0, &[3.0, 5.0], 10_000);
        assert!((oracle - 3.0).abs() < 1e-12);
        let q = cost_from_production(&f0, &[3.0, 5.0], DualityOptions::for_dim(2)).unwrap();
        assert!((q - 3.0).abs() < 1e-12, "{q}");
    }

    #[test]
    fn ces_dual_matches_brute_force_and_closed_form() {
        let f0 = ProductionSpec::Ces { rho: 0.5, weights: vec![0.5, 0.5] };
        let oracle = brute_force(&f0, &[1.0, 1.0], 10_000);
        let q = cost_from_production(&f0, &[1.0, 1.0], DualityOptions::for_dim(2)).unwrap();
        assert!((q - oracle).abs() <= 1e-4 * oracle, "{q} vs {oracle}");
        // Dual CES exponent rho/(rho-1) = -1 gives (sum b^2 / x)^-1 = 2.
        assert!((q - 2.0).abs() < 1e-9, "{q}");
    }

    #[test]
    fn output_is_homogeneous_of_degree_one() {
        let f0 = ProductionSpec::Ces { rho: -2.0, weights: vec![0.3, 0.7, 1.1] };
        let opts = DualityOptions { resolution: 120, refinement_steps: 40 };
        let x = [0.7, 2.0, 1.3];
        let a = cost_from_production(&f0, &x, opts).unwrap();
        let b = cost_from_production(&f0, &[1.4, 4.0, 2.6], opts).unwrap();
        assert!((b - 2.0 * a).abs() <= 1e-6 * b, "{a} {b}");
    }

    #[test]
    fn invalid_rho_rejected() {
        let f0 = ProductionSpec::Ces { rho: 0.0, weights: vec![1.0, 1.0] };
        assert!(cost_from_production(&f0, &[1.0, 1.0], DualityOptions::for_dim(2)).is_err());
    }
}
