use crate::error::{Error, Result};

/// Polynomial family paired with its probability density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Legendre polynomials, uniform density 1/2 on [-1, 1].
    Legendre,
    /// Probabilists' Hermite polynomials, standard normal density.
    Hermite,
}

impl Family {
    pub fn density(self, z: f64) -> f64 {
        match self {
            Family::Legendre => {
                if (-1.0..=1.0).contains(&z) {
                    0.5
                } else {
                    0.0
                }
            }
            Family::Hermite => (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }

    /// Off-diagonal three-term recurrence coefficient `b_k` (k >= 1) of the
    /// orthonormal family: `z psi_k = b_{k+1} psi_{k+1} + a_k psi_k + b_k psi_{k-1}`.
    pub fn recurrence_b(self, k: usize) -> f64 {
        let kf = k as f64;
        match self {
            Family::Legendre => kf / (4.0 * kf * kf - 1.0).sqrt(),
            Family::Hermite => kf.sqrt(),
        }
    }

    /// Diagonal recurrence coefficient `a_k`. Both supported densities are
    /// symmetric, so it vanishes.
    pub fn recurrence_a(self, _k: usize) -> f64 {
        0.0
    }

    pub fn is_symmetric(self) -> bool {
        true
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "legendre" | "legendre-uniform" | "uniform" => Ok(Family::Legendre),
            "hermite" | "hermite-gaussian" | "gaussian" => Ok(Family::Hermite),
            other => Err(Error::config(format!(
                "unsupported polynomial family `{other}`"
            ))),
        }
    }
}

/// Number of n-variate polynomials of total degree at most `p`, `binom(n+p, p)`.
pub fn chaos_dimension(n: usize, p: usize) -> usize {
    let mut acc: u128 = 1;
    for i in 1..=p as u128 {
        acc = acc * (n as u128 + i) / i;
    }
    acc as usize
}

/// Orthonormal polynomial basis `psi_1 .. psi_K` under the family density.
///
/// Only one random dimension is supported; the multi-index bookkeeping is
/// kept so that `K = binom(n+P, P)` is reported consistently.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosBasis {
    family: Family,
    max_degree: usize,
    random_dim: usize,
    size: usize,
}

impl ChaosBasis {
    pub fn new(family: Family, max_degree: usize) -> Self {
        ChaosBasis {
            family,
            max_degree,
            random_dim: 1,
            size: max_degree + 1,
        }
    }

    /// Basis over `n` random variables. Anything other than `n = 1` is rejected.
    pub fn with_random_dim(family: Family, random_dim: usize, max_degree: usize) -> Result<Self> {
        if random_dim != 1 {
            return Err(Error::config(format!(
                "only one random dimension is supported (requested n = {random_dim}, K would be {})",
                chaos_dimension(random_dim, max_degree)
            )));
        }
        Ok(Self::new(family, max_degree))
    }

    /// Smallest basis holding `k` modes.
    pub fn with_size(family: Family, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::config("gPC size K must be at least 1"));
        }
        Ok(Self::new(family, k - 1))
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn random_dim(&self) -> usize {
        self.random_dim
    }

    /// Number of modes `K`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn multi_indices(&self) -> Vec<Vec<usize>> {
        (0..self.size).map(|k| vec![k]).collect()
    }

    /// Evaluates all `K` basis functions at `z`.
    pub fn eval_into(&self, z: f64, out: &mut [f64]) {
        eval_orthonormal(self.family, z, out);
    }

    pub fn eval(&self, z: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        self.eval_into(z, &mut out);
        out
    }

    pub fn eval_one(&self, j: usize, z: f64) -> f64 {
        let mut buf = vec![0.0; j + 1];
        eval_orthonormal(self.family, z, &mut buf);
        buf[j]
    }
}

/// Fills `out[k] = psi_k(z)` for `k < out.len()` with the orthonormal recurrence.
pub(crate) fn eval_orthonormal(family: Family, z: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = (z - family.recurrence_a(0)) / family.recurrence_b(1);
    for k in 1..out.len() - 1 {
        out[k + 1] = ((z - family.recurrence_a(k)) * out[k] - family.recurrence_b(k) * out[k - 1])
            / family.recurrence_b(k + 1);
    }
}

/// Value and derivative of the orthonormal polynomial of degree `n` at `z`.
pub(crate) fn eval_with_derivative(family: Family, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut d_prev) = (0.0, 0.0);
    let (mut p, mut d) = (1.0, 0.0);
    for k in 0..n {
        let b_next = family.recurrence_b(k + 1);
        let b_k = if k == 0 { 0.0 } else { family.recurrence_b(k) };
        let shift = z - family.recurrence_a(k);
        let p_next = (shift * p - b_k * p_prev) / b_next;
        let d_next = (p + shift * d - b_k * d_prev) / b_next;
        p_prev = p;
        d_prev = d;
        p = p_next;
        d = d_next;
    }
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_basis() {
        let b = ChaosBasis::new(Family::Legendre, 0);
        assert_eq!(b.size(), 1);
        for z in [-1.0, -0.3, 0.0, 0.7] {
            assert_eq!(b.eval(z), vec![1.0]);
        }
    }

    #[test]
    fn legendre_closed_forms() {
        let b = ChaosBasis::new(Family::Legendre, 2);
        for z in [-0.9, -0.2, 0.0, 0.4, 1.0] {
            let v = b.eval(z);
            assert!((v[1] - 3f64.sqrt() * z).abs() < 1e-14);
            assert!((v[2] - 5f64.sqrt() / 2.0 * (3.0 * z * z - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn hermite_closed_forms() {
        let b = ChaosBasis::new(Family::Hermite, 3);
        let z = 0.8;
        let v = b.eval(z);
        assert!((v[1] - z).abs() < 1e-14);
        assert!((v[2] - (z * z - 1.0) / 2f64.sqrt()).abs() < 1e-14);
        assert!((v[3] - (z * z * z - 3.0 * z) / 6f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn dimension_formula() {
        assert_eq!(chaos_dimension(1, 4), 5);
        assert_eq!(chaos_dimension(2, 2), 6);
        assert_eq!(chaos_dimension(3, 3), 20);
    }

    #[test]
    fn multivariate_rejected() {
        assert!(ChaosBasis::with_random_dim(Family::Legendre, 2, 2).is_err());
        assert!(ChaosBasis::with_random_dim(Family::Legendre, 1, 2).is_ok());
        assert!("laguerre".parse::<Family>().is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for fam in [Family::Legendre, Family::Hermite] {
            let h = 1e-6;
            let (_, d) = eval_with_derivative(fam, 5, 0.3);
            let (pp, _) = eval_with_derivative(fam, 5, 0.3 + h);
            let (pm, _) = eval_with_derivative(fam, 5, 0.3 - h);
            assert!((d - (pp - pm) / (2.0 * h)).abs() < 1e-6);
        }
    }
}
