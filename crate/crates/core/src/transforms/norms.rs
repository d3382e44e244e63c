//! `||f||_{r,c} = (int |f|^r x^{rc - I} dx)^{1/r}` and `ess sup |f x^c|`.
//!
//! In log-coordinates both are plain `L^r` norms of `E_c f = e^{c.y} f(e^y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mellin_engine::GridFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Infinity,
}

impl NormOrder {
    pub const ALL: [NormOrder; 3] = [NormOrder::One, NormOrder::Two, NormOrder::Infinity];

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim() {
            "1" => Ok(NormOrder::One),
            "2" => Ok(NormOrder::Two),
            "inf" | "infinity" | "∞" => Ok(NormOrder::Infinity),
            other => Err(Error::Argument(format!("norm order must be 1, 2 or inf, got {other:?}"))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            NormOrder::One => "1",
            NormOrder::Two => "2",
            NormOrder::Infinity => "inf",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec {
    r: NormOrder,
    c: Vec<f64>,
}

impl WeightedNormSpec {
    pub fn new(r: NormOrder, c: Vec<f64>) -> Result<Self> {
        if c.is_empty() || c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain(format!("norm weights must be positive, got {c:?}")));
        }
        Ok(Self { r, c })
    }

    pub fn r(&self) -> NormOrder {
        self.r
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// `alpha = c_1 + ... + c_n`.
    pub fn alpha(&self) -> f64 {
        self.c.iter().sum()
    }

    /// Same order on the dual plane `I - c`; fails unless every `c_i < 1`.
    pub fn dual(&self) -> Result<Self> {
        Self::new(self.r, self.c.iter().map(|v| 1.0 - v).collect())
    }
}

/// Grid quadrature of `||f||_{r,c}`.
pub fn weighted_norm(f: &GridFunction, spec: &WeightedNormSpec) -> Result<f64> {
    let grid = f.grid();
    if grid.dim() != spec.c.len() {
        return Err(Error::Shape("norm weights and grid dimensions differ".into()));
    }
    let mut y = vec![0.0; grid.dim()];
    let weighted = f.values().iter().enumerate().map(|(k, v)| {
        grid.log_point(k, &mut y);
        v.abs() * spec.c.iter().zip(&y).map(|(c, y)| c * y).sum::<f64>().exp()
    });
    let vol = grid.cell_volume();
    Ok(match spec.r {
        NormOrder::One => weighted.sum::<f64>() * vol,
        NormOrder::Two => (weighted.map(|v| v * v).sum::<f64>() * vol).sqrt(),
        NormOrder::Infinity => weighted.fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mellin_engine::{ec_transform, LogGrid};

    #[test]
    fn exponential_l1_norm_is_gamma_one() {
        let grid = LogGrid::cube(1, -40.0, 5.0, 4096).unwrap();
        let f = GridFunction::from_fn(grid, |x| (-x[0]).exp()).unwrap();
        let spec = WeightedNormSpec::new(NormOrder::One, vec![1.0]).unwrap();
        assert!((weighted_norm(&f, &spec).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn sup_norm_of_reciprocal() {
        let grid = LogGrid::cube(1, -5.0, 5.0, 64).unwrap();
        let f = GridFunction::from_fn(grid, |x| 1.0 / x[0]).unwrap();
        let spec = WeightedNormSpec::new(NormOrder::Infinity, vec![1.0]).unwrap();
        assert!((weighted_norm(&f, &spec).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_has_zero_norm() {
        let f = GridFunction::zeros(LogGrid::cube(2, -1.0, 1.0, 8).unwrap());
        for r in NormOrder::ALL {
            let spec = WeightedNormSpec::new(r, vec![0.5, 0.5]).unwrap();
            assert_eq!(weighted_norm(&f, &spec).unwrap(), 0.0);
        }
    }

    #[test]
    fn equals_plain_norm_of_ec_transform() {
        let grid = LogGrid::cube(2, -6.0, 3.0, 64).unwrap();
        let f = GridFunction::from_fn(grid.clone(), |x| x[0] * (-x[0] - 2.0 * x[1]).exp()).unwrap();
        let c = vec![0.4, 0.7];
        let e = ec_transform(&f, &c).unwrap();
        let vol = grid.cell_volume();
        let l2 = (e.values().iter().map(|v| v * v).sum::<f64>() * vol).sqrt();
        let spec = WeightedNormSpec::new(NormOrder::Two, c).unwrap();
        assert!((weighted_norm(&f, &spec).unwrap() - l2).abs() <= 1e-10 * l2);
    }

    #[test]
    fn rejects_nonpositive_weights() {
        assert!(WeightedNormSpec::new(NormOrder::One, vec![0.0, 1.0]).is_err());
        assert!(NormOrder::parse("3").is_err());
    }
}
