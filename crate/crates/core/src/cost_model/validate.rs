use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::CostExpr;

const SEED: u64 = 0x5eed_c057;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ValidationReport {
    pub samples: usize,
    /// Max over samples of `|q(lx) - l q(x)| / (l q(x))`.
    pub homogeneity_max_residual: f64,
    pub positivity_ok: bool,
    /// Coordinatewise strict increase on sampled pairs.
    pub monotone_ok: bool,
    /// Every CES tree with exponents in (0, 1] has bounded level sets.
    pub analytic_bounded: bool,
    /// Ray probe along every axis.
    pub probe_bounded: bool,
    pub level_set_bounded: bool,
}

impl ValidationReport {
    pub fn passed(&self, homogeneity_tol: f64) -> bool {
        self.homogeneity_max_residual <= homogeneity_tol
            && self.positivity_ok
            && self.monotone_ok
            && self.level_set_bounded
    }
}

/// Returns true when `q` keeps growing along every ray `x = 1 + t e_i`.
///
/// A function with an unbounded level set through the unit point has some
/// axis along which it saturates; saturation shows as two equal far probes.
pub fn probe_level_sets_bounded<F: Fn(&[f64]) -> f64>(q: F, dim: usize) -> bool {
    let probes: Vec<f64> = (0..=10).map(|k| 10f64.powi(10 * k)).collect();
    (0..dim).all(|axis| {
        let values: Vec<f64> = probes
            .iter()
            .map(|&t| {
                let mut x = vec![1.0; dim];
                x[axis] = t;
                q(&x)
            })
            .collect();
        values.iter().all(|v| v.is_finite() && *v > 0.0)
            && values
                .windows(2)
                .skip(probes.len() - 4)
                .all(|w| w[1] > w[0] * (1.0 + 1e-9))
    })
}

pub fn validate_cost(q: &CostExpr, sample_count: usize) -> ValidationReport {
    let n = q.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut residual: f64 = 0.0;
    let mut positive = true;
    let mut monotone = true;
    let log_uniform = |rng: &mut ChaCha8Rng| 10f64.powf(rng.gen_range(-3.0..3.0));
    for _ in 0..sample_count.max(1) {
        let x: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng)).collect();
        let lambda = log_uniform(&mut rng);
        let qx = q.value(&x);
        let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
        let qlx = q.value(&scaled);
        positive &= qx.is_finite() && qx > 0.0;
        residual = residual.max((qlx - lambda * qx).abs() / (lambda * qx));

        let axis = rng.gen_range(0..n);
        let mut bumped = x.clone();
        bumped[axis] *= 1.0 + rng.gen_range(0.01..1.0);
        monotone &= q.value(&bumped) > qx;
    }
    let probe = probe_level_sets_bounded(|x| q.value(x), n);
    ValidationReport {
        samples: sample_count.max(1),
        homogeneity_max_residual: residual,
        positivity_ok: positive,
        monotone_ok: monotone,
        analytic_bounded: true,
        probe_bounded: probe,
        level_set_bounded: probe,
    }
}
