//! Quadrature in the averaging variable `s ∈ [0, 1]`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes in `[0, 1]` with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub const DEFAULT_NODES: usize = 32;

impl SQuadrature {
    /// Gauss–Legendre rule with `count` nodes mapped to `[0, 1]`.
    pub fn gauss_legendre(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("quadrature needs at least one node"));
        }
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        let n = count as f64;
        for i in 0..count {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = libm::cos(PI * (i as f64 + 0.75) / (n + 0.5));
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(count, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(count, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes.push(0.5 * (1.0 - x));
            weights.push(0.5 * w);
        }
        // nodes were produced in decreasing x, i.e. increasing s
        Ok(Self { nodes, weights })
    }

    /// Custom rule; validated against the invariants.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidParameter(
                "nodes and weights must be non-empty and equal length",
            ));
        }
        if nodes.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidParameter("quadrature nodes must lie in [0, 1]"));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter("quadrature weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidParameter("quadrature weights must sum to one"));
        }
        Ok(Self { nodes, weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

impl Default for SQuadrature {
    fn default() -> Self {
        Self::gauss_legendre(DEFAULT_NODES).expect("default rule")
    }
}

// (P_n(x), P_n'(x)) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_nodes_inside() {
        for count in [1, 2, 5, 32, 64, 128] {
            let q = SQuadrature::gauss_legendre(count).unwrap();
            let total: f64 = q.weights().iter().sum();
            assert!((total - 1.0).abs() < 1e-14, "{count}: {total}");
            assert!(q.nodes().iter().all(|s| *s > 0.0 && *s < 1.0));
            assert!(q.weights().iter().all(|w| *w > 0.0));
            assert!(q.nodes().windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        let q = SQuadrature::gauss_legendre(8).unwrap();
        for p in 0..16 {
            let v: f64 = q.iter().map(|(s, w)| w * libm::pow(s, p as f64)).sum();
            assert!((v - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn custom_rule_validation() {
        assert!(SQuadrature::new(alloc::vec![0.5], alloc::vec![1.0]).is_ok());
        assert!(SQuadrature::new(alloc::vec![1.5], alloc::vec![1.0]).is_err());
        assert!(SQuadrature::new(alloc::vec![0.2, 0.8], alloc::vec![0.5, 0.4]).is_err());
        assert!(SQuadrature::new(alloc::vec![0.2, 0.8], alloc::vec![1.1, -0.1]).is_err());
        assert!(SQuadrature::gauss_legendre(0).is_err());
    }
}
