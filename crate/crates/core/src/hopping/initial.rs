use num_complex::Complex64;

use super::problem::HoppingProblem;
use crate::chaos::GalerkinSpace;
use crate::error::Result;
use crate::spectral::{PeriodicGrid, Tensor};

/// Well-prepared profile values `(F+, F-, G, H)` at one fast phase `tau` for
/// real coupling `b`, with `e_plus`, `e_minus` the transport speeds of the
/// band profiles and `two_e = 2E`.
#[allow(clippy::too_many_arguments)]
pub fn well_prepared(
    f_plus: f64,
    f_minus: f64,
    f_inter: Complex64,
    b: f64,
    e_plus: f64,
    e_minus: f64,
    two_e: f64,
    eps: f64,
    tau: f64,
) -> [f64; 4] {
    let (s, c) = tau.sin_cos();
    let (g, h) = (f_inter.re, f_inter.im);
    // Im(f^i (1 - e^{-i tau}))
    let coherence = g * s + h * (1.0 - c);
    let jump = f_plus - f_minus;
    [
        f_plus + 2.0 * eps * b * coherence / e_plus,
        f_minus - 2.0 * eps * b * coherence / e_minus,
        g - eps * b * jump * s / two_e,
        h + eps * b * jump * (c - 1.0) / two_e,
    ]
}

/// gPC coefficients of the well-prepared profiles `F+, F-, G, H`, each of
/// shape `[nx, np, ntau, K]`.
pub fn prepare_initial_hopping(
    problem: &HoppingProblem,
    space: &GalerkinSpace,
    xg: &PeriodicGrid,
    pg: &PeriodicGrid,
    tau: &PeriodicGrid,
) -> Result<[Tensor; 4]> {
    let (nx, np, nt, k, ng) = (
        xg.len(),
        pg.len(),
        tau.len(),
        space.size(),
        space.node_count(),
    );
    let dims = [nx, np, nt, k];
    let mut out = [
        Tensor::zeros(&dims),
        Tensor::zeros(&dims),
        Tensor::zeros(&dims),
        Tensor::zeros(&dims),
    ];
    let taus = tau.nodes();
    let mut nodal = vec![vec![0.0; ng]; 4];
    let mut coeffs = vec![0.0; k];
    for (j, x) in xg.nodes().into_iter().enumerate() {
        let two_e: Vec<f64> = space
            .nodes()
            .iter()
            .enumerate()
            .map(|(q, &z)| {
                let e = (problem.gap)(x, z);
                crate::chaos::checked_recip(e, "1/(2E)", || format!("x = {x}, node {q}"))
                    .map(|_| 2.0 * e)
            })
            .collect::<Result<_>>()?;
        for (kk, p) in pg.nodes().into_iter().enumerate() {
            let fp = (problem.f_plus)(x, p);
            let fm = (problem.f_minus)(x, p);
            let fi = (problem.f_inter)(x, p);
            let b = (problem.coupling)(x, p);
            for (i, &t) in taus.iter().enumerate() {
                for q in 0..ng {
                    // S(0) = 0, so both band speeds equal 2E initially
                    let v =
                        well_prepared(fp, fm, fi, b, two_e[q], two_e[q], two_e[q], problem.eps, t);
                    for (field, val) in nodal.iter_mut().zip(v) {
                        field[q] = val;
                    }
                }
                for (f, field) in nodal.iter().enumerate() {
                    space.from_nodal_real(field, &mut coeffs);
                    let off = out[f].offset(&[j, kk, i, 0]);
                    for (dst, c) in out[f].data_mut()[off..off + k].iter_mut().zip(&coeffs) {
                        *dst = Complex64::new(*c, 0.0);
                    }
                }
            }
        }
    }
    Ok(out)
}
