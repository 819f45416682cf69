use nalgebra::{DMatrix, SymmetricEigen};

use super::basis::{eval_orthonormal, eval_with_derivative, Family};
use crate::error::{Error, Result};

/// Nodes and positive weights of a Gauss rule for a probability density.
/// Weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Arbitrary rule; weights must be positive and sum to one.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::config(
                "quadrature needs matching, non-empty nodes and weights",
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::config("quadrature weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::config(format!(
                "quadrature weights sum to {total}, expected 1"
            )));
        }
        Ok(QuadratureRule { nodes, weights })
    }

    /// Single node carrying all the mass; turns a Galerkin solver into a
    /// deterministic solve at `z`.
    pub fn point(z: f64) -> Self {
        QuadratureRule {
            nodes: vec![z],
            weights: vec![1.0],
        }
    }

    /// `n`-point Gauss rule for the family density.
    pub fn gauss(family: Family, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("quadrature rule needs at least one node"));
        }
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            jacobi[(k, k)] = family.recurrence_a(k);
            if k + 1 < n {
                let b = family.recurrence_b(k + 1);
                jacobi[(k, k + 1)] = b;
                jacobi[(k + 1, k)] = b;
            }
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());

        // A couple of Newton sweeps on psi_n recover full relative accuracy
        // for the larger Hermite nodes.
        for z in nodes.iter_mut() {
            for _ in 0..3 {
                let (p, d) = eval_with_derivative(family, n, *z);
                if d == 0.0 {
                    break;
                }
                let step = p / d;
                *z -= step;
                if step.abs() <= 1e-16 * z.abs().max(1.0) {
                    break;
                }
            }
        }
        if family.is_symmetric() {
            for i in 0..n / 2 {
                let j = n - 1 - i;
                let m = 0.5 * (nodes[j] - nodes[i]);
                nodes[i] = -m;
                nodes[j] = m;
            }
            if n % 2 == 1 {
                nodes[n / 2] = 0.0;
            }
        }

        let mut psi = vec![0.0; n];
        let mut weights: Vec<f64> = nodes
            .iter()
            .map(|&z| {
                eval_orthonormal(family, z, &mut psi);
                1.0 / psi.iter().map(|v| v * v).sum::<f64>()
            })
            .collect();
        if family.is_symmetric() {
            for i in 0..n / 2 {
                let j = n - 1 - i;
                let w = 0.5 * (weights[i] + weights[j]);
                weights[i] = w;
                weights[j] = w;
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(QuadratureRule { nodes, weights })
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

    /// Quadrature approximation of `E[f]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * f(z))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_legendre() {
        let q = QuadratureRule::gauss(Family::Legendre, 2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((q.nodes()[0] + r).abs() < 1e-15);
        assert!((q.nodes()[1] - r).abs() < 1e-15);
        assert!((q.weights()[0] - 0.5).abs() < 1e-15);
        assert!((q.weights()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn three_point_hermite() {
        let q = QuadratureRule::gauss(Family::Hermite, 3).unwrap();
        assert!((q.nodes()[2] - 3f64.sqrt()).abs() < 1e-14);
        assert!(q.nodes()[1].abs() < 1e-15);
        assert!((q.weights()[1] - 2.0 / 3.0).abs() < 1e-14);
        assert!((q.weights()[0] - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn monomial_exactness() {
        // E[z^{2m}] = 1/(2m+1) (uniform) and (2m-1)!! (normal)
        let n = 12;
        let leg = QuadratureRule::gauss(Family::Legendre, n).unwrap();
        let her = QuadratureRule::gauss(Family::Hermite, n).unwrap();
        for deg in 0..2 * n {
            let exact_u = if deg % 2 == 1 {
                0.0
            } else {
                1.0 / (deg as f64 + 1.0)
            };
            assert!(
                (leg.integrate(|z| z.powi(deg as i32)) - exact_u).abs() < 1e-13,
                "deg {deg}"
            );
            let exact_n = if deg % 2 == 1 {
                0.0
            } else {
                (1..deg).step_by(2).map(|k| k as f64).product::<f64>()
            };
            let got = her.integrate(|z| z.powi(deg as i32));
            // odd moments cancel between terms of size E|z|^deg
            let scale = her.integrate(|z| z.abs().powi(deg as i32));
            assert!(
                (got - exact_n).abs() <= 1e-12 * scale.max(1.0),
                "deg {deg}: {got} vs {exact_n}"
            );
        }
    }

    #[test]
    fn large_rules_are_sane() {
        for fam in [Family::Legendre, Family::Hermite] {
            let q = QuadratureRule::gauss(fam, 64).unwrap();
            assert!(q.weights().iter().all(|w| *w > 0.0));
            assert!(q.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!((q.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_rules() {
        assert!(QuadratureRule::gauss(Family::Legendre, 0).is_err());
        assert!(QuadratureRule::new(vec![0.0], vec![0.5]).is_err());
        assert!(QuadratureRule::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
