use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::basis::ChaosBasis;
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};

/// Smallest admissible magnitude of a denominator in a reciprocal weight.
pub const SINGULAR_THRESHOLD: f64 = 1e-14;

/// `1/d`, or a singular-weight error when `|d|` is below [`SINGULAR_THRESHOLD`].
pub fn checked_recip(d: f64, what: &str, location: impl FnOnce() -> String) -> Result<f64> {
    if !(d.abs() >= SINGULAR_THRESHOLD) {
        return Err(Error::singular(what, location()));
    }
    Ok(1.0 / d)
}

/// Dense symmetric `K x K` Galerkin matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinMatrix {
    k: usize,
    data: Vec<f64>,
}

impl GalerkinMatrix {
    pub fn identity(k: usize) -> Self {
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k + i] = 1.0;
        }
        GalerkinMatrix { k, data }
    }

    pub fn from_row_major(k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != k * k {
            return Err(Error::Contract(format!(
                "expected {} entries, got {}",
                k * k,
                data.len()
            )));
        }
        Ok(GalerkinMatrix { k, data })
    }

    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.k + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, s: f64) -> Self {
        GalerkinMatrix {
            k: self.k,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self + s * other`
    pub fn axpy(&self, s: f64, other: &GalerkinMatrix) -> Self {
        GalerkinMatrix {
            k: self.k,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.k {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn apply(&self, v: &[Complex64], out: &mut [Complex64]) {
        apply_dense(self.k, &self.data, v, out);
    }

    pub fn apply_real(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.k) {
            *o = self.data[i * self.k..(i + 1) * self.k]
                .iter()
                .zip(v)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    pub fn eigen(&self) -> Result<SymEigen> {
        SymEigen::new(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.values)
    }
}

pub(crate) fn apply_dense(k: usize, m: &[f64], v: &[Complex64], out: &mut [Complex64]) {
    for i in 0..k {
        let row = &m[i * k..(i + 1) * k];
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..k {
            acc += v[j] * row[j];
        }
        out[i] = acc;
    }
}

/// Eigen-decomposition `M = Q diag(values) Q^T` of a symmetric Galerkin matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymEigen {
    k: usize,
    pub values: Vec<f64>,
    /// Row-major `Q`; column `j` is the eigenvector of `values[j]`.
    pub vectors: Vec<f64>,
}

impl SymEigen {
    pub fn new(m: &GalerkinMatrix) -> Result<Self> {
        let k = m.k;
        let scale = m.data.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
        if m.max_asymmetry() > 1e-10 * scale {
            return Err(Error::Contract(format!(
                "matrix generator is not symmetric (asymmetry {:e})",
                m.max_asymmetry()
            )));
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite matrix entry".into()));
        }
        if k == 1 {
            return Ok(SymEigen {
                k,
                values: vec![m.data[0]],
                vectors: vec![1.0],
            });
        }
        let dm = DMatrix::from_row_slice(k, k, &m.data);
        let eig = SymmetricEigen::new(dm);
        let mut vectors = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                vectors[i * k + j] = eig.eigenvectors[(i, j)];
            }
        }
        Ok(SymEigen {
            k,
            values: eig.eigenvalues.iter().copied().collect(),
            vectors,
        })
    }

    pub fn size(&self) -> usize {
        self.k
    }

    /// `out = Q^T v` (coordinates in the eigenbasis).
    pub fn to_eigenbasis(&self, v: &[Complex64], out: &mut [Complex64]) {
        let k = self.k;
        for j in 0..k {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..k {
                acc += v[i] * self.vectors[i * k + j];
            }
            out[j] = acc;
        }
    }

    /// `out = Q c`.
    pub fn from_eigenbasis(&self, c: &[Complex64], out: &mut [Complex64]) {
        apply_dense(self.k, &self.vectors, c, out);
    }

    /// In place `v <- Q f(Lambda) Q^T v`; `scratch` must hold `K` entries.
    pub fn apply_function(
        &self,
        f: impl Fn(f64) -> Complex64,
        v: &mut [Complex64],
        scratch: &mut [Complex64],
    ) {
        self.to_eigenbasis(v, scratch);
        for (c, &lam) in scratch.iter_mut().zip(&self.values) {
            *c *= f(lam);
        }
        self.from_eigenbasis(scratch, v);
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, b| a.max(b.abs()))
    }
}

/// Fully symmetric `K x K x K` tensor `D_{lmk} = E[w psi_l psi_m psi_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleTensor {
    k: usize,
    data: Vec<f64>,
}

impl TripleTensor {
    pub fn size(&self) -> usize {
        self.k
    }

    pub fn get(&self, l: usize, m: usize, k: usize) -> f64 {
        self.data[(l * self.k + m) * self.k + k]
    }

    /// Matrix `M_{km} = sum_l c_l D_{lmk}`.
    pub fn contract_first(&self, c: &[f64]) -> GalerkinMatrix {
        let k = self.k;
        let mut data = vec![0.0; k * k];
        for (l, &cl) in c.iter().enumerate().take(k) {
            if cl == 0.0 {
                continue;
            }
            let slab = &self.data[l * k * k..(l + 1) * k * k];
            for (d, s) in data.iter_mut().zip(slab) {
                *d += cl * s;
            }
        }
        GalerkinMatrix { k, data }
    }
}

/// Mean and standard deviation read off a gPC coefficient vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMoments {
    pub mean: Complex64,
    /// `sqrt(sum_{j>=2} |c_j|^2)`
    pub sd: f64,
    pub sd_re: f64,
    pub sd_im: f64,
}

pub fn moments_from_coeffs(coeffs: &[Complex64]) -> CoefficientMoments {
    let tail = coeffs.get(1..).unwrap_or(&[]);
    let sd_re = tail.iter().map(|c| c.re * c.re).sum::<f64>().sqrt();
    let sd_im = tail.iter().map(|c| c.im * c.im).sum::<f64>().sqrt();
    CoefficientMoments {
        mean: coeffs.first().copied().unwrap_or_default(),
        sd: sd_re.hypot(sd_im),
        sd_re,
        sd_im,
    }
}

/// A basis together with the quadrature used to project onto it and the
/// tabulated `psi_j(z_l)`. Everything the solvers need from the random space.
#[derive(Debug, Clone)]
pub struct GalerkinSpace {
    basis: ChaosBasis,
    rule: QuadratureRule,
    /// `table[l * K + j] = psi_j(z_l)`
    table: Vec<f64>,
}

impl GalerkinSpace {
    pub fn new(basis: ChaosBasis, rule: QuadratureRule) -> Self {
        let k = basis.size();
        let mut table = vec![0.0; rule.len() * k];
        for (l, &z) in rule.nodes().iter().enumerate() {
            basis.eval_into(z, &mut table[l * k..(l + 1) * k]);
        }
        GalerkinSpace { basis, rule, table }
    }

    /// Gauss rule with `max(2P + 2, requested)` nodes.
    pub fn with_default_rule(basis: ChaosBasis, requested: usize) -> Result<Self> {
        let n = requested.max(2 * basis.max_degree() + 2);
        let rule = QuadratureRule::gauss(basis.family(), n)?;
        Ok(Self::new(basis, rule))
    }

    /// One-mode space concentrated at `z`: Galerkin solvers on this space are
    /// deterministic solvers for the sample `z`.
    pub fn point(basis_family: super::basis::Family, z: f64) -> Self {
        Self::new(ChaosBasis::new(basis_family, 0), QuadratureRule::point(z))
    }

    pub fn basis(&self) -> &ChaosBasis {
        &self.basis
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn size(&self) -> usize {
        self.basis.size()
    }

    pub fn node_count(&self) -> usize {
        self.rule.len()
    }

    pub fn nodes(&self) -> &[f64] {
        self.rule.nodes()
    }

    pub fn weights(&self) -> &[f64] {
        self.rule.weights()
    }

    /// `psi_0(z_l), ..., psi_{K-1}(z_l)`
    pub fn psi(&self, l: usize) -> &[f64] {
        let k = self.size();
        &self.table[l * k..(l + 1) * k]
    }

    /// Evaluates an expansion at quadrature node `l`.
    pub fn eval_at_node(&self, coeffs: &[Complex64], l: usize) -> Complex64 {
        self.psi(l).iter().zip(coeffs).map(|(p, c)| c * p).sum()
    }

    pub fn eval_real_at_node(&self, coeffs: &[f64], l: usize) -> f64 {
        self.psi(l).iter().zip(coeffs).map(|(p, c)| c * p).sum()
    }

    /// Values of the expansion at every quadrature node.
    pub fn to_nodal(&self, coeffs: &[Complex64], out: &mut [Complex64]) {
        for (l, o) in out.iter_mut().enumerate().take(self.node_count()) {
            *o = self.eval_at_node(coeffs, l);
        }
    }

    pub fn to_nodal_real(&self, coeffs: &[f64], out: &mut [f64]) {
        for (l, o) in out.iter_mut().enumerate().take(self.node_count()) {
            *o = self.eval_real_at_node(coeffs, l);
        }
    }

    /// Quadrature projection of nodal values onto the basis.
    pub fn from_nodal(&self, nodal: &[Complex64], out: &mut [Complex64]) {
        let k = self.size();
        out[..k]
            .iter_mut()
            .for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (l, (&v, &w)) in nodal.iter().zip(self.weights()).enumerate() {
            let vw = v * w;
            for (o, &p) in out[..k].iter_mut().zip(self.psi(l)) {
                *o += vw * p;
            }
        }
    }

    pub fn from_nodal_real(&self, nodal: &[f64], out: &mut [f64]) {
        let k = self.size();
        out[..k].iter_mut().for_each(|o| *o = 0.0);
        for (l, (&v, &w)) in nodal.iter().zip(self.weights()).enumerate() {
            let vw = v * w;
            for (o, &p) in out[..k].iter_mut().zip(self.psi(l)) {
                *o += vw * p;
            }
        }
    }

    /// Matrix `M_{sj} = sum_l w_l psi_s(z_l) psi_j(z_l) omega_l` from weight
    /// values already sampled at the nodes, written into `out` (length K^2).
    pub fn matrix_from_nodal_into(&self, w: &[f64], out: &mut [f64]) -> Result<()> {
        let k = self.size();
        if let Some(l) = w.iter().position(|v| !v.is_finite()) {
            return Err(Error::singular(
                "matrix weight",
                format!("quadrature node {l}"),
            ));
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        for (l, &wl) in w.iter().enumerate() {
            let s = wl * self.weights()[l];
            if s == 0.0 {
                continue;
            }
            let psi = self.psi(l);
            for i in 0..k {
                let si = s * psi[i];
                for j in i..k {
                    out[i * k + j] += si * psi[j];
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                out[i * k + j] = out[j * k + i];
            }
        }
        Ok(())
    }

    pub fn matrix_from_nodal(&self, w: &[f64]) -> Result<GalerkinMatrix> {
        let k = self.size();
        let mut data = vec![0.0; k * k];
        self.matrix_from_nodal_into(w, &mut data)?;
        Ok(GalerkinMatrix { k, data })
    }

    pub fn weighted_matrix(&self, weight: impl Fn(f64) -> f64) -> Result<GalerkinMatrix> {
        let w: Vec<f64> = self.nodes().iter().map(|&z| weight(z)).collect();
        self.matrix_from_nodal(&w)
    }

    pub fn tensor_from_nodal(&self, w: &[f64]) -> Result<TripleTensor> {
        let k = self.size();
        if let Some(l) = w.iter().position(|v| !v.is_finite()) {
            return Err(Error::singular(
                "tensor weight",
                format!("quadrature node {l}"),
            ));
        }
        let mut data = vec![0.0; k * k * k];
        for (l, &wl) in w.iter().enumerate() {
            let s = wl * self.weights()[l];
            let psi = self.psi(l);
            for a in 0..k {
                for b in a..k {
                    let sab = s * psi[a] * psi[b];
                    for c in b..k {
                        data[(a * k + b) * k + c] += sab * psi[c];
                    }
                }
            }
        }
        for a in 0..k {
            for b in a..k {
                for c in b..k {
                    let v = data[(a * k + b) * k + c];
                    for (i, j, m) in [(a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        data[(i * k + j) * k + m] = v;
                    }
                }
            }
        }
        Ok(TripleTensor { k, data })
    }

    pub fn triple_tensor(&self, weight: impl Fn(f64) -> f64) -> Result<TripleTensor> {
        let w: Vec<f64> = self.nodes().iter().map(|&z| weight(z)).collect();
        self.tensor_from_nodal(&w)
    }

    /// Component `j` is `sum_l f(z_l) psi_j(z_l) omega_l`.
    pub fn project(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let nodal: Vec<f64> = self.nodes().iter().map(|&z| f(z)).collect();
        if let Some(l) = nodal.iter().position(|v| !v.is_finite()) {
            return Err(Error::singular(
                "projected function",
                format!("quadrature node {l}"),
            ));
        }
        let mut out = vec![0.0; self.size()];
        self.from_nodal_real(&nodal, &mut out);
        Ok(out)
    }

    pub fn project_complex(&self, f: impl Fn(f64) -> Complex64) -> Result<Vec<Complex64>> {
        let nodal: Vec<Complex64> = self.nodes().iter().map(|&z| f(z)).collect();
        if let Some(l) = nodal.iter().position(|v| !v.is_finite()) {
            return Err(Error::singular(
                "projected function",
                format!("quadrature node {l}"),
            ));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.size()];
        self.from_nodal(&nodal, &mut out);
        Ok(out)
    }

    /// Galerkin projection of `weight * r(u)` where `u` is the expansion
    /// `coeffs`. `weight` holds values at the nodes (`None` means 1).
    /// `scratch` must hold one entry per node.
    pub fn nonlinear_into(
        &self,
        r: &(impl Fn(Complex64) -> Complex64 + ?Sized),
        coeffs: &[Complex64],
        weight: Option<&[f64]>,
        scratch: &mut [Complex64],
        out: &mut [Complex64],
    ) -> Result<()> {
        for l in 0..self.node_count() {
            let u = self.eval_at_node(coeffs, l);
            let v = r(u);
            if !v.is_finite() {
                return Err(Error::NonlinearEvaluation {
                    node: l,
                    value: format!("{u}"),
                });
            }
            scratch[l] = match weight {
                Some(w) => v * w[l],
                None => v,
            };
        }
        self.from_nodal(&scratch[..self.node_count()], out);
        Ok(())
    }

    pub fn nonlinear(
        &self,
        r: &(impl Fn(Complex64) -> Complex64 + ?Sized),
        coeffs: &[Complex64],
        weight: Option<&[f64]>,
    ) -> Result<Vec<Complex64>> {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.node_count()];
        let mut out = vec![Complex64::new(0.0, 0.0); self.size()];
        self.nonlinear_into(r, coeffs, weight, &mut scratch, &mut out)?;
        Ok(out)
    }
}

pub fn build_basis(family: super::basis::Family, max_degree: usize) -> ChaosBasis {
    ChaosBasis::new(family, max_degree)
}

pub fn gauss_rule(basis: &ChaosBasis, n: usize) -> Result<QuadratureRule> {
    QuadratureRule::gauss(basis.family(), n)
}

pub fn assemble_weighted_matrix(
    basis: &ChaosBasis,
    rule: &QuadratureRule,
    weight: impl Fn(f64) -> f64,
) -> Result<GalerkinMatrix> {
    GalerkinSpace::new(basis.clone(), rule.clone()).weighted_matrix(weight)
}

pub fn assemble_triple_tensor(
    basis: &ChaosBasis,
    rule: &QuadratureRule,
    weight: impl Fn(f64) -> f64,
) -> Result<TripleTensor> {
    GalerkinSpace::new(basis.clone(), rule.clone()).triple_tensor(weight)
}

pub fn project_function(
    basis: &ChaosBasis,
    rule: &QuadratureRule,
    f: impl Fn(f64) -> f64,
) -> Result<Vec<f64>> {
    GalerkinSpace::new(basis.clone(), rule.clone()).project(f)
}

pub fn galerkin_nonlinear(
    basis: &ChaosBasis,
    rule: &QuadratureRule,
    r: impl Fn(Complex64) -> Complex64,
    coeffs: &[Complex64],
    weight: Option<&dyn Fn(f64) -> f64>,
) -> Result<Vec<Complex64>> {
    let space = GalerkinSpace::new(basis.clone(), rule.clone());
    let w: Option<Vec<f64>> = weight.map(|f| space.nodes().iter().map(|&z| f(z)).collect());
    space.nonlinear(&r, coeffs, w.as_deref())
}

#[cfg(test)]
mod tests {
    use super::super::basis::Family;
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn space(p: usize, ng: usize) -> GalerkinSpace {
        let b = ChaosBasis::new(Family::Legendre, p);
        let q = QuadratureRule::gauss(Family::Legendre, ng).unwrap();
        GalerkinSpace::new(b, q)
    }

    #[test]
    fn gram_is_identity() {
        for fam in [Family::Legendre, Family::Hermite] {
            let b = ChaosBasis::new(fam, 9);
            let q = QuadratureRule::gauss(fam, 10).unwrap();
            let m = GalerkinSpace::new(b, q).weighted_matrix(|_| 1.0).unwrap();
            for i in 0..10 {
                for j in 0..10 {
                    let d = if i == j { 1.0 } else { 0.0 };
                    assert!((m.get(i, j) - d).abs() < 1e-12, "{fam:?} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn weighted_matrix_entries() {
        let x: f64 = 0.37;
        let ax = 1.5 + (2.0 * x).cos();
        let m = space(3, 8)
            .weighted_matrix(|z| ax * (1.0 + 0.5 * z))
            .unwrap();
        assert_abs_diff_eq!(m.get(0, 0), ax, epsilon = 1e-13);
        assert_abs_diff_eq!(m.get(0, 1), ax * 0.5 / 3f64.sqrt(), epsilon = 1e-13);
        assert!(m.max_asymmetry() < 1e-15);
        let z2 = space(0, 2).weighted_matrix(|z| z * z).unwrap();
        assert_abs_diff_eq!(z2.get(0, 0), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn tensor_entries_and_symmetry() {
        let d = space(4, 10).triple_tensor(|z| z).unwrap();
        assert_abs_diff_eq!(d.get(0, 0, 1), 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(d.get(0, 0, 0), 0.0, epsilon = 1e-15);
        let d = space(3, 8).triple_tensor(|z| (1.0 + z).exp()).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                for e in 0..4 {
                    let v = d.get(a, b, e);
                    assert!((v - d.get(b, a, e)).abs() < 1e-13);
                    assert!((v - d.get(e, b, a)).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn contraction_matches_tensor() {
        let d = space(2, 6).triple_tensor(|z| 2.0 + z).unwrap();
        let m = d.contract_first(&[0.3, -1.0, 0.5]);
        for k in 0..3 {
            for mm in 0..3 {
                let want = 0.3 * d.get(0, mm, k) - d.get(1, mm, k) + 0.5 * d.get(2, mm, k);
                assert!((m.get(k, mm) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn projections() {
        let s = space(3, 8);
        let one = s.project(|_| 1.0).unwrap();
        assert_abs_diff_eq!(
            one.as_slice(),
            [1.0, 0.0, 0.0, 0.0].as_slice(),
            epsilon = 1e-14
        );
        let lin = s.project(|z| 1.0 + 0.5 * z).unwrap();
        assert_abs_diff_eq!(lin[1], 0.5 / 3f64.sqrt(), epsilon = 1e-14);
        assert!(s.project(|z| 1.0 / z.abs().min(0.0)).is_err());
    }

    #[test]
    fn nonlinear_identity_and_square() {
        let s = space(3, 8);
        let coeffs = vec![c(0.3, 1.0), c(-0.2, 0.1), c(0.05, 0.0), c(0.0, -0.02)];
        let same = s.nonlinear(&|u: Complex64| u, &coeffs, None).unwrap();
        for (a, b) in same.iter().zip(&coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
        let sq = s
            .nonlinear(
                &|u: Complex64| u * u,
                &[c(2.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
                None,
            )
            .unwrap();
        assert!((sq[0] - c(3.0, 4.0)).norm() < 1e-14);
        assert!(sq[1..].iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn nonlinear_reports_bad_node() {
        let s = space(1, 4);
        let err = s
            .nonlinear(
                &|u: Complex64| u * u / (u * u + 2.0 * u.norm_sqr()),
                &[c(0.0, 0.0), c(0.0, 0.0)],
                None,
            )
            .unwrap_err();
        assert!(matches!(err, Error::NonlinearEvaluation { node: 0, .. }));
    }

    #[test]
    fn moments_examples() {
        let m = moments_from_coeffs(&[c(2.0, 0.0), c(0.0, 3.0), c(4.0, 0.0)]);
        assert_eq!(m.mean, c(2.0, 0.0));
        assert_abs_diff_eq!(m.sd, 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.sd_re, 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.sd_im, 3.0, epsilon = 1e-15);
        let m = moments_from_coeffs(&[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(m.sd, 1.0);
    }

    #[test]
    fn eigen_apply_roundtrip() {
        let m = space(3, 8).weighted_matrix(|z| 1.5 + z).unwrap();
        let e = m.eigen().unwrap();
        assert!(e.min() > 0.5 - 1e-12 && e.max() < 2.5 + 1e-12);
        let mut v = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.5), c(-1.0, 0.2)];
        let orig = v.clone();
        let mut scratch = vec![c(0.0, 0.0); 4];
        e.apply_function(|l| c(l, 0.0), &mut v, &mut scratch);
        let mut direct = vec![c(0.0, 0.0); 4];
        m.apply(&orig, &mut direct);
        for (a, b) in v.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn nonsymmetric_rejected() {
        let m = GalerkinMatrix::from_row_major(2, vec![1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(matches!(m.eigen(), Err(Error::Contract(_))));
    }

    #[test]
    fn point_space_is_deterministic() {
        let s = GalerkinSpace::point(Family::Legendre, 0.4);
        let m = s.weighted_matrix(|z| 1.0 + z).unwrap();
        assert_abs_diff_eq!(m.get(0, 0), 1.4, epsilon = 1e-15);
    }

    #[test]
    fn recip_threshold() {
        assert!(checked_recip(1e-15, "1/a", || "x".into()).is_err());
        assert_eq!(checked_recip(2.0, "1/a", || "x".into()).unwrap(), 0.5);
    }
}
