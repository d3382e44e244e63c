//! Unit cost functions built from nested CES nodes.
//!
//! A [`CostExpr`] is a tree whose leaves are input axes and whose internal
//! nodes are CES aggregators
//!
//! ```text
//! q(u) = C (a_1 u_1^alpha + ... + a_k u_k^alpha)^(1/alpha),  alpha in (0, 1]
//! ```
//!
//! Substituting a sub-tree for one argument of a node is the factor
//! aggregation used to build nested CES technologies. Every tree of this form
//! is positive, degree-1 homogeneous, C^1 and has bounded level sets on the
//! open positive orthant.

mod parse;
mod production;
mod validate;

pub use production::{cost_from_production, DualityOptions, ProductionSpec};
pub use validate::{probe_level_sets_bounded, validate_cost, ValidationReport};

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Below this exponent CES nodes are evaluated with a log-sum-exp.
const LOG_SPACE_ALPHA: f64 = 0.05;

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A CES aggregator over `children`.
#[derive(Clone, Debug, PartialEq)]
pub struct CesNode {
    alpha: f64,
    scale: f64,
    weights: Vec<f64>,
    children: Vec<Node>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Zero-based input axis.
    Axis(usize),
    Ces(CesNode),
}

impl CesNode {
    pub fn new(alpha: f64, scale: f64, weights: Vec<f64>, children: Vec<Node>) -> Result<Self> {
        check_alpha(alpha)?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Structure(format!("C must be positive, got {scale}")));
        }
        if weights.len() != children.len() {
            return Err(Error::Structure(format!(
                "{} weights for {} children",
                weights.len(),
                children.len()
            )));
        }
        if children.len() < 2 {
            return Err(Error::Structure(
                "a CES node needs at least two arguments".into(),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Structure(format!("weights must be positive, got {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Structure(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self {
            alpha,
            scale,
            weights,
            children,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn children(&self) -> &[Node] {
        &self.children
    }

    /// Value of the aggregator at child values `u`, together with the
    /// normalized shares `a_j u_j^alpha / sum_k a_k u_k^alpha` when requested.
    fn combine(&self, u: &[f64], shares: Option<&mut Vec<f64>>) -> f64 {
        let alpha = self.alpha;
        if alpha < LOG_SPACE_ALPHA {
            let logs: Vec<f64> = self
                .weights
                .iter()
                .zip(u)
                .map(|(a, v)| a.ln() + alpha * v.ln())
                .collect();
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = logs.iter().map(|l| (l - m).exp()).sum();
            if let Some(out) = shares {
                out.clear();
                out.extend(logs.iter().map(|l| (l - m).exp() / sum));
            }
            self.scale * ((m + sum.ln()) / alpha).exp()
        } else {
            let terms: Vec<f64> = if alpha == 1.0 {
                self.weights.iter().zip(u).map(|(a, v)| a * v).collect()
            } else {
                self.weights
                    .iter()
                    .zip(u)
                    .map(|(a, v)| a * v.powf(alpha))
                    .collect()
            };
            let sum: f64 = terms.iter().sum();
            if let Some(out) = shares {
                out.clear();
                out.extend(terms.iter().map(|t| t / sum));
            }
            if alpha == 1.0 {
                self.scale * sum
            } else {
                self.scale * sum.powf(1.0 / alpha)
            }
        }
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        return Ok(());
    }
    let hint = if alpha == 0.0 {
        " (the Cobb-Douglas limit alpha = 0 has unbounded level sets)"
    } else if alpha < 0.0 || alpha == f64::NEG_INFINITY {
        " (alpha < 0, including the Leontief limit, gives unbounded level sets)"
    } else {
        " (alpha > 1 does not define a concave technology)"
    };
    Err(Error::Structure(format!(
        "alpha must lie in (0, 1], got {alpha}{hint}"
    )))
}

impl Node {
    pub fn axis(index: usize) -> Self {
        Node::Axis(index)
    }

    pub fn ces(alpha: f64, scale: f64, weights: Vec<f64>, children: Vec<Node>) -> Result<Self> {
        CesNode::new(alpha, scale, weights, children).map(Node::Ces)
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Node::Axis(i) => x[*i],
            Node::Ces(node) => {
                let u: Vec<f64> = node.children.iter().map(|c| c.value(x)).collect();
                node.combine(&u, None)
            }
        }
    }

    fn scaled_value(&self, p: &[f64], x: &[f64]) -> f64 {
        match self {
            Node::Axis(i) => p[*i] * x[*i],
            Node::Ces(node) => {
                let u: Vec<f64> = node
                    .children
                    .iter()
                    .map(|c| c.scaled_value(p, x))
                    .collect();
                node.combine(&u, None)
            }
        }
    }

    /// Adds `seed * d(node)/dx` into `grad` and returns the node value.
    fn accumulate_gradient(&self, x: &[f64], seed: f64, grad: &mut [f64]) -> f64 {
        match self {
            Node::Axis(i) => {
                grad[*i] += seed;
                x[*i]
            }
            Node::Ces(node) => {
                let u: Vec<f64> = node.children.iter().map(|c| c.value(x)).collect();
                let mut shares = Vec::with_capacity(u.len());
                let v = node.combine(&u, Some(&mut shares));
                for ((child, uj), wj) in node.children.iter().zip(&u).zip(&shares) {
                    child.accumulate_gradient(x, seed * v * wj / uj, grad);
                }
                v
            }
        }
    }

    fn collect_axes(&self, out: &mut Vec<usize>) {
        match self {
            Node::Axis(i) => out.push(*i),
            Node::Ces(node) => node.children.iter().for_each(|c| c.collect_axes(out)),
        }
    }

    pub fn axes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_axes(&mut out);
        out
    }

    fn depth(&self) -> usize {
        match self {
            Node::Axis(_) => 0,
            Node::Ces(node) => 1 + node.children.iter().map(Node::depth).max().unwrap_or(0),
        }
    }
}

/// A validated cost tree over `dim` axes.
#[derive(Clone, Debug, PartialEq)]
pub struct CostExpr {
    root: Node,
    dim: usize,
}

impl CostExpr {
    /// Checks that the leaves form a permutation of `0..n` with `n >= 2`.
    pub fn new(root: Node) -> Result<Self> {
        if matches!(root, Node::Axis(_)) {
            return Err(Error::Structure(
                "a cost expression must have a CES node at the root".into(),
            ));
        }
        let mut axes = root.axes();
        let dim = axes.len();
        axes.sort_unstable();
        for (expected, got) in axes.iter().enumerate() {
            if *got != expected {
                let dup = axes.windows(2).find(|w| w[0] == w[1]).map(|w| w[0]);
                return Err(Error::Structure(match dup {
                    Some(d) => format!("axis {} appears more than once", d + 1),
                    None => format!("axis {} is missing", expected + 1),
                }));
            }
        }
        Ok(Self { root, dim })
    }

    /// Flat CES over axes `0..weights.len()`.
    pub fn flat_ces(alpha: f64, scale: f64, weights: Vec<f64>) -> Result<Self> {
        let children = (0..weights.len()).map(Node::Axis).collect();
        Self::new(Node::ces(alpha, scale, weights, children)?)
    }

    /// Linear cost `C * sum a_j x_j`.
    pub fn linear(scale: f64, weights: Vec<f64>) -> Result<Self> {
        Self::flat_ces(1.0, scale, weights)
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse::parse_cost(text)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Shape(format!(
                "expected a {}-vector, got {}",
                self.dim,
                x.len()
            )));
        }
        if let Some((i, v)) = x.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!(
                "coordinate {} must be positive, got {v}",
                i + 1
            )));
        }
        Ok(())
    }

    /// `q(x)` with argument checks.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.root.value(x))
    }

    /// `q(x)` without argument checks; `x` must have `dim` positive entries.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.root.value(x)
    }

    /// `q_p(x) = q(p_1 x_1, ..., p_n x_n)` without argument checks.
    #[inline]
    pub fn scaled_value(&self, p: &[f64], x: &[f64]) -> f64 {
        self.root.scaled_value(p, x)
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let mut grad = vec![0.0; self.dim];
        self.root.accumulate_gradient(x, 1.0, &mut grad);
        Ok(grad)
    }

    /// Gradient of `x -> q_p(x)`.
    pub fn scaled_gradient(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        let px: Vec<f64> = p.iter().zip(x).map(|(a, b)| a * b).collect();
        let mut grad = vec![0.0; self.dim];
        self.root.accumulate_gradient(&px, 1.0, &mut grad);
        grad.iter_mut().zip(p).for_each(|(g, pi)| *g *= pi);
        grad
    }

    /// Hex SHA-256 of the canonical text form.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_string().as_bytes());
        hex::encode(hasher.finalize())
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Axis(i) => write!(f, "(axis {})", i + 1),
            Node::Ces(node) => {
                write!(f, "(ces :alpha {} :C {} :a (", node.alpha, node.scale)?;
                for (k, a) in node.weights.iter().enumerate() {
                    if k > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")?;
                for child in &node.children {
                    write!(f, " {child}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for CostExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl std::str::FromStr for CostExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Vec<f64> {
        vec![0.5, 0.5]
    }

    fn nested() -> CostExpr {
        let inner = Node::ces(0.5, 1.0, half(), vec![Node::axis(1), Node::axis(2)]).unwrap();
        CostExpr::new(Node::ces(1.0, 1.0, half(), vec![Node::axis(0), inner]).unwrap()).unwrap()
    }

    #[test]
    fn linear_value_at_diagonal() {
        let q = CostExpr::linear(1.0, half()).unwrap();
        assert_eq!(q.eval(&[2.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn half_ces_direct_formula() {
        let q = CostExpr::flat_ces(0.5, 1.0, half()).unwrap();
        let v = q.eval(&[4.0, 1.0]).unwrap();
        assert!((v - 2.25).abs() < 1e-14, "{v}");
    }

    #[test]
    fn nested_unit_point() {
        assert!((nested().eval(&[1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_gradient_is_weights() {
        let q = CostExpr::linear(1.0, half()).unwrap();
        assert_eq!(q.gradient(&[3.0, 0.2]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn half_ces_euler_identity_at_unit() {
        let q = CostExpr::flat_ces(0.5, 1.0, half()).unwrap();
        let g = q.gradient(&[1.0, 1.0]).unwrap();
        assert!((g[0] + g[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn small_alpha_uses_log_space_and_matches_direct() {
        let q = CostExpr::flat_ces(0.01, 2.0, vec![0.3, 0.7]).unwrap();
        let x = [1e3, 1e-3];
        let direct = 2.0 * (0.3 * 1e3f64.powf(0.01) + 0.7 * 1e-3f64.powf(0.01)).powf(100.0);
        let v = q.eval(&x).unwrap();
        assert!((v - direct).abs() <= 1e-11 * direct, "{v} vs {direct}");
    }

    #[test]
    fn rejects_bad_points() {
        let q = CostExpr::linear(1.0, half()).unwrap();
        assert!(matches!(q.eval(&[1.0, 0.0]), Err(Error::Domain(_))));
        assert!(matches!(q.eval(&[1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn rejects_alpha_limits() {
        for alpha in [0.0, -1.0, f64::NEG_INFINITY, 1.5] {
            let err = CostExpr::flat_ces(alpha, 1.0, half()).unwrap_err();
            assert!(err.to_string().contains("(0, 1]"), "{err}");
        }
    }

    #[test]
    fn rejects_duplicate_axes() {
        let root = Node::ces(1.0, 1.0, half(), vec![Node::axis(0), Node::axis(0)]).unwrap();
        let err = CostExpr::new(root).unwrap_err();
        assert!(err.to_string().contains("more than once"), "{err}");
    }

    #[test]
    fn display_round_trips_through_parser() {
        let q = nested();
        let back = CostExpr::parse(&q.to_string()).unwrap();
        assert_eq!(q, back);
        assert_eq!(q.digest(), back.digest());
    }

    #[test]
    fn scaled_gradient_matches_chain_rule() {
        let q = nested();
        let p = [2.0, 0.5, 3.0];
        let x = [0.7, 1.3, 0.4];
        let g = q.scaled_gradient(&p, &x);
        let px: Vec<f64> = p.iter().zip(&x).map(|(a, b)| a * b).collect();
        let base = q.gradient(&px).unwrap();
        for i in 0..3 {
            assert!((g[i] - base[i] * p[i]).abs() < 1e-14);
        }
    }
}
