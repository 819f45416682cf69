use num_complex::Complex64;
use rayon::prelude::*;

use super::problem::{HoppingConfig, HoppingProblem, HoppingSetup, SourceScheme};
use super::{advect_momentum, advect_space, HoppingOutcome};
use crate::chaos::{GalerkinMatrix, SymEigen};
use crate::error::{Error, Result};
use crate::scalar::Splitting;
use crate::spectral::Tensor;

/// Final coefficients of the direct solver with the mass history.
#[derive(Debug, Clone)]
pub struct DirectRun {
    /// `f+, f-, g = Re f^i, h = Im f^i`, each `[nx, np, K]`.
    pub fields: [Tensor; 4],
    /// `sum (f+ + f-)_1 dx dp` after every step, starting at `t = 0`.
    pub mass: Vec<f64>,
}

pub fn solve_hopping_direct(
    problem: &HoppingProblem,
    cfg: &HoppingConfig,
) -> Result<HoppingOutcome> {
    let setup = HoppingSetup::new(problem, cfg)?;
    let run = run_direct(problem, &setup, cfg)?;
    Ok(outcome_from_fields(&setup, &run.fields))
}

/// Direct solver keeping the raw coefficients, for invariant checks.
pub fn hopping_direct_run(problem: &HoppingProblem, cfg: &HoppingConfig) -> Result<DirectRun> {
    let setup = HoppingSetup::new(problem, cfg)?;
    run_direct(problem, &setup, cfg)
}

/// The coefficient source step on its own, for invariant checks.
pub struct SourceStepper {
    setup: HoppingSetup,
    mats: SourceMatrices,
    eps: f64,
}

impl SourceStepper {
    pub fn new(problem: &HoppingProblem, cfg: &HoppingConfig) -> Result<Self> {
        let setup = HoppingSetup::new(problem, cfg)?;
        let mats = SourceMatrices::new(&setup)?;
        Ok(SourceStepper {
            setup,
            mats,
            eps: problem.eps,
        })
    }

    /// Coefficient shape `[nx, np, K]` of each of the four fields.
    pub fn shape(&self) -> [usize; 3] {
        [self.setup.nx(), self.setup.np(), self.setup.k()]
    }

    /// Advances `f+, f-, g, h` by `h` with the given scheme.
    pub fn step(&self, f: &mut [Tensor; 4], h: f64, scheme: SourceScheme) {
        source_step(&self.setup, &self.mats, f, h, self.eps, scheme);
    }
}

pub(crate) fn outcome_from_fields(setup: &HoppingSetup, f: &[Tensor; 4]) -> HoppingOutcome {
    let (np, k) = (setup.np(), setup.k());
    let recon = &setup.recon;
    HoppingOutcome::build(setup, |j, kk, l| {
        let off = (j * np + kk) * k;
        let ev = |t: &Tensor| recon.eval_at_node(&t.data()[off..off + k], l).re;
        (ev(&f[0]), ev(&f[1]), Complex64::new(ev(&f[2]), ev(&f[3])))
    })
}

/// Per-x Galerkin matrices of `E` and `E^2` and the eigen-decompositions
/// the source step needs.
pub(crate) struct SourceMatrices {
    gap: Vec<GalerkinMatrix>,
    gap_eig: Vec<SymEigen>,
    gap_sq: Vec<GalerkinMatrix>,
    gap_sq_eig: Vec<SymEigen>,
}

impl SourceMatrices {
    pub(crate) fn new(setup: &HoppingSetup) -> Result<Self> {
        let mut m = SourceMatrices {
            gap: Vec::new(),
            gap_eig: Vec::new(),
            gap_sq: Vec::new(),
            gap_sq_eig: Vec::new(),
        };
        for j in 0..setup.nx() {
            let e = setup.gap_at(j);
            let w = setup.space.matrix_from_nodal(e)?;
            let sq: Vec<f64> = e.iter().map(|v| v * v).collect();
            let p = setup.space.matrix_from_nodal(&sq)?;
            let pe = p.eigen()?;
            if pe.min() <= 0.0 {
                return Err(Error::Contract(format!(
                    "Galerkin matrix of E^2 is not positive definite at x index {j}"
                )));
            }
            m.gap_eig.push(w.eigen()?);
            m.gap.push(w);
            m.gap_sq.push(p);
            m.gap_sq_eig.push(pe);
        }
        Ok(m)
    }
}

pub(crate) fn run_direct(
    problem: &HoppingProblem,
    setup: &HoppingSetup,
    cfg: &HoppingConfig,
) -> Result<DirectRun> {
    let (nx, np, k) = (setup.nx(), setup.np(), setup.k());
    let dims = [nx, np, k];
    let mut f = [
        Tensor::zeros(&dims),
        Tensor::zeros(&dims),
        Tensor::zeros(&dims),
        Tensor::zeros(&dims),
    ];
    let q1 = setup.space.project(|_| 1.0)?;
    for (j, x) in setup.xg.nodes().into_iter().enumerate() {
        for (kk, p) in setup.pg.nodes().into_iter().enumerate() {
            let fi = (problem.f_inter)(x, p);
            let vals = [
                (problem.f_plus)(x, p),
                (problem.f_minus)(x, p),
                fi.re,
                fi.im,
            ];
            let off = (j * np + kk) * k;
            for (field, v) in f.iter_mut().zip(vals) {
                for m in 0..k {
                    field.data_mut()[off + m] = Complex64::new(v * q1[m], 0.0);
                }
            }
        }
    }
    let gal_dx: Vec<SymEigen> = (0..nx)
        .map(|j| setup.space.matrix_from_nodal(setup.gap_dx_at(j))?.eigen())
        .collect::<Result<_>>()?;
    let mats = SourceMatrices::new(setup)?;

    let (steps, h) = cfg.steps();
    let cell = setup.xg.spacing() * setup.pg.spacing();
    let mass_of = |f: &[Tensor; 4]| -> f64 {
        f[0].data()
            .chunks(k)
            .zip(f[1].data().chunks(k))
            .map(|(a, b)| a[0].re + b[0].re)
            .sum::<f64>()
            * cell
    };
    let mut mass = vec![mass_of(&f)];
    for _ in 0..steps {
        match cfg.splitting {
            Splitting::Lie => {
                transport(setup, &gal_dx, &mut f, h);
                source_step(setup, &mats, &mut f, h, problem.eps, cfg.source);
            }
            Splitting::Strang => {
                transport(setup, &gal_dx, &mut f, 0.5 * h);
                source_step(setup, &mats, &mut f, h, problem.eps, cfg.source);
                transport_reversed(setup, &gal_dx, &mut f, 0.5 * h);
            }
        }
        mass.push(mass_of(&f));
    }
    Ok(DirectRun { fields: f, mass })
}

fn transport(setup: &HoppingSetup, gal_dx: &[SymEigen], f: &mut [Tensor; 4], h: f64) {
    for field in f.iter_mut() {
        advect_space(field, setup, h);
    }
    advect_momentum(&mut f[0], setup, gal_dx, -1.0, h);
    advect_momentum(&mut f[1], setup, gal_dx, 1.0, h);
}

fn transport_reversed(setup: &HoppingSetup, gal_dx: &[SymEigen], f: &mut [Tensor; 4], h: f64) {
    advect_momentum(&mut f[0], setup, gal_dx, -1.0, h);
    advect_momentum(&mut f[1], setup, gal_dx, 1.0, h);
    for field in f.iter_mut() {
        advect_space(field, setup, h);
    }
}

/// One step of `f+' = 2b g`, `f-' = -2b g`, `g' = -b f+ + b f- + 2E h/eps`,
/// `h' = -2E g/eps` on gPC coefficients.
pub(crate) fn source_step(
    setup: &HoppingSetup,
    mats: &SourceMatrices,
    f: &mut [Tensor; 4],
    h: f64,
    eps: f64,
    scheme: SourceScheme,
) {
    {
        let (np, k) = (setup.np(), setup.k());
        let [fp, fm, g, hh] = f;
        fp.data_mut()
            .par_chunks_mut(k)
            .zip(fm.data_mut().par_chunks_mut(k))
            .zip(g.data_mut().par_chunks_mut(k))
            .zip(hh.data_mut().par_chunks_mut(k))
            .enumerate()
            .for_each(|(site, (((a, b), c), d))| {
                let j = site / np;
                let coupling = setup.coupling[site];
                match scheme {
                    SourceScheme::CrankNicolson => {
                        crank_nicolson(mats, j, coupling, h, eps, a, b, c, d);
                    }
                    SourceScheme::Exact => {
                        exact_rotation(&mats.gap_eig[j], coupling, h, eps, a, b, c, d);
                    }
                }
            });
    }
}

/// Crank-Nicolson with substitution: `g` from the implicit system with the
/// Galerkin matrix `P` of `E^2`, then `f+`, `f-`, `h` explicitly.
#[allow(clippy::too_many_arguments)]
fn crank_nicolson(
    m: &SourceMatrices,
    j: usize,
    b: f64,
    dt: f64,
    eps: f64,
    fp: &mut [Complex64],
    fm: &mut [Complex64],
    g: &mut [Complex64],
    h: &mut [Complex64],
) {
    let k = g.len();
    let mut wh = vec![Complex64::new(0.0, 0.0); k];
    let mut pg = vec![Complex64::new(0.0, 0.0); k];
    m.gap[j].apply(h, &mut wh);
    m.gap_sq[j].apply(g, &mut pg);
    let mut g_new: Vec<Complex64> = (0..k)
        .map(|i| {
            g[i] + (-b * fp[i] + b * fm[i] + wh[i] * (2.0 / eps)
                - g[i] * (b * b * dt)
                - pg[i] * (dt / (eps * eps)))
                * dt
        })
        .collect();
    let mut scratch = vec![Complex64::new(0.0, 0.0); k];
    let shift = 1.0 + b * b * dt * dt;
    let scale = dt * dt / (eps * eps);
    m.gap_sq_eig[j].apply_function(
        |lam| Complex64::new(1.0 / (shift + scale * lam), 0.0),
        &mut g_new,
        &mut scratch,
    );
    let sum: Vec<Complex64> = g.iter().zip(&g_new).map(|(a, b)| a + b).collect();
    let mut wsum = vec![Complex64::new(0.0, 0.0); k];
    m.gap[j].apply(&sum, &mut wsum);
    for i in 0..k {
        fp[i] += sum[i] * (b * dt);
        fm[i] -= sum[i] * (b * dt);
        h[i] -= wsum[i] * (dt / eps);
        g[i] = g_new[i];
    }
}

/// Exact flow of the source: with `d = (f+ - f-)/2`, each eigen-component
/// `(d, g, h)` of the Galerkin matrix of `E` (eigenvalue `lam`) rotates as
/// `y' = a x y` with `a = (-2 lam/eps, 0, -2b)`; `f+ + f-` is invariant.
#[allow(clippy::too_many_arguments)]
fn exact_rotation(
    eig: &SymEigen,
    b: f64,
    dt: f64,
    eps: f64,
    fp: &mut [Complex64],
    fm: &mut [Complex64],
    g: &mut [Complex64],
    h: &mut [Complex64],
) {
    let k = g.len();
    let half_jump: Vec<Complex64> = fp
        .iter()
        .zip(fm.iter())
        .map(|(a, b)| (a - b) * 0.5)
        .collect();
    let total: Vec<Complex64> = fp.iter().zip(fm.iter()).map(|(a, b)| a + b).collect();
    let mut d_hat = vec![Complex64::new(0.0, 0.0); k];
    let mut g_hat = vec![Complex64::new(0.0, 0.0); k];
    let mut h_hat = vec![Complex64::new(0.0, 0.0); k];
    eig.to_eigenbasis(&half_jump, &mut d_hat);
    eig.to_eigenbasis(g, &mut g_hat);
    eig.to_eigenbasis(h, &mut h_hat);
    for m in 0..k {
        let axis = [-2.0 * eig.values[m] / eps, 0.0, -2.0 * b];
        let y = rodrigues(axis, dt, [d_hat[m], g_hat[m], h_hat[m]]);
        d_hat[m] = y[0];
        g_hat[m] = y[1];
        h_hat[m] = y[2];
    }
    let mut d = vec![Complex64::new(0.0, 0.0); k];
    eig.from_eigenbasis(&d_hat, &mut d);
    eig.from_eigenbasis(&g_hat, g);
    eig.from_eigenbasis(&h_hat, h);
    for i in 0..k {
        fp[i] = total[i] * 0.5 + d[i];
        fm[i] = total[i] * 0.5 - d[i];
    }
}

/// Solution at time `t` of `y' = a x y`: rotation about `a` by `|a| t`.
pub(crate) fn rodrigues(a: [f64; 3], t: f64, y: [Complex64; 3]) -> [Complex64; 3] {
    let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if norm == 0.0 {
        return y;
    }
    let u = [a[0] / norm, a[1] / norm, a[2] / norm];
    let (s, c) = (norm * t).sin_cos();
    let cross = [
        y[2] * u[1] - y[1] * u[2],
        y[0] * u[2] - y[2] * u[0],
        y[1] * u[0] - y[0] * u[1],
    ];
    let along = y[0] * u[0] + y[1] * u[1] + y[2] * u[2];
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        out[i] = y[i] * c + cross[i] * s + along * u[i] * (1.0 - c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hopping::HoppingProblem;
    use std::sync::Arc;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    fn small_cfg(k: usize) -> HoppingConfig {
        HoppingConfig {
            nx: 8,
            np: 8,
            k,
            ns: 4,
            ..Default::default()
        }
    }

    #[test]
    fn rodrigues_solves_the_cross_product_flow() {
        // compare with a fine RK4 integration of y' = a x y
        let a = [0.3, -1.2, 0.7];
        let y0 = [c(1.0), c(-0.5), c(2.0)];
        let mut y = [1.0, -0.5, 2.0];
        let n = 2000;
        for _ in 0..n {
            crate::spectral::rk4_step(&mut y, 1.5 / n as f64, |v, out| {
                out[0] = a[1] * v[2] - a[2] * v[1];
                out[1] = a[2] * v[0] - a[0] * v[2];
                out[2] = a[0] * v[1] - a[1] * v[0];
            });
        }
        let r = rodrigues(a, 1.5, y0);
        for i in 0..3 {
            assert!((r[i].re - y[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn crank_nicolson_preserves_coherence_modulus_without_coupling() {
        let mut prob = HoppingProblem::example41(0.05);
        prob.coupling = Arc::new(|_, _| 0.0);
        prob.gap = Arc::new(|_, _| 0.8);
        prob.gap_dx = Arc::new(|_, _| 0.0);
        let cfg = small_cfg(3);
        let setup = HoppingSetup::new(&prob, &cfg).unwrap();
        let mats = SourceMatrices::new(&setup).unwrap();
        let mut f = [
            Tensor::from_fn(&[8, 8, 3], |i| c(0.1 * i[2] as f64)),
            Tensor::from_fn(&[8, 8, 3], |_| c(0.2)),
            Tensor::from_fn(&[8, 8, 3], |i| c((i[0] as f64).sin() + i[2] as f64)),
            Tensor::from_fn(&[8, 8, 3], |i| c((i[1] as f64).cos() - 0.5 * i[2] as f64)),
        ];
        let before: Vec<f64> = f[2]
            .data()
            .iter()
            .zip(f[3].data())
            .map(|(g, h)| g.norm_sqr() + h.norm_sqr())
            .collect();
        source_step(
            &setup,
            &mats,
            &mut f,
            0.37,
            prob.eps,
            SourceScheme::CrankNicolson,
        );
        for (i, (g, h)) in f[2].data().iter().zip(f[3].data()).enumerate() {
            assert!((g.norm_sqr() + h.norm_sqr() - before[i]).abs() < 1e-13 * before[i].max(1.0));
        }
    }

    #[test]
    fn source_step_conserves_band_sum_pointwise() {
        let prob = HoppingProblem::example41(0.1);
        let cfg = small_cfg(4);
        let setup = HoppingSetup::new(&prob, &cfg).unwrap();
        let mats = SourceMatrices::new(&setup).unwrap();
        for scheme in [SourceScheme::CrankNicolson, SourceScheme::Exact] {
            let mut f = [
                Tensor::from_fn(&[8, 8, 4], |i| c(1.0 + 0.1 * i[2] as f64)),
                Tensor::from_fn(&[8, 8, 4], |i| c(0.5 - 0.1 * (i[0] + i[2]) as f64)),
                Tensor::from_fn(&[8, 8, 4], |i| c((i[1] as f64).sin())),
                Tensor::from_fn(&[8, 8, 4], |i| c((i[0] as f64).cos())),
            ];
            let sum0: Vec<Complex64> = f[0]
                .data()
                .iter()
                .zip(f[1].data())
                .map(|(a, b)| a + b)
                .collect();
            source_step(&setup, &mats, &mut f, 0.05, prob.eps, scheme);
            for (i, (a, b)) in f[0].data().iter().zip(f[1].data()).enumerate() {
                assert!((a + b - sum0[i]).norm() < 1e-14);
            }
        }
    }

    /// Single-node source step against the matrix exponential of the 4x4
    /// generator, computed by a converged Taylor series.
    #[test]
    fn crank_nicolson_is_second_order_against_exponential() {
        let (b, e, eps) = (-0.4, 1.3, 1.0);
        let gen = [
            [0.0, 0.0, 2.0 * b, 0.0],
            [0.0, 0.0, -2.0 * b, 0.0],
            [-b, b, 0.0, 2.0 * e / eps],
            [0.0, 0.0, -2.0 * e / eps, 0.0],
        ];
        let expm = |t: f64, y: [f64; 4]| {
            let mut term = y;
            let mut acc = y;
            for n in 1..60 {
                let mut next = [0.0; 4];
                for r in 0..4 {
                    for col in 0..4 {
                        next[r] += gen[r][col] * term[col] * t / n as f64;
                    }
                }
                term = next;
                for r in 0..4 {
                    acc[r] += term[r];
                }
            }
            acc
        };
        let mut prob = HoppingProblem::example41(eps);
        prob.coupling = Arc::new(move |_, _| b);
        prob.gap = Arc::new(move |_, _| e);
        let cfg = HoppingConfig {
            nx: 2,
            np: 2,
            k: 1,
            ns: 1,
            ..Default::default()
        };
        let setup = HoppingSetup::new(&prob, &cfg).unwrap();
        let mats = SourceMatrices::new(&setup).unwrap();
        let y0 = [0.7, 0.2, -0.3, 0.9];
        let mut errs = Vec::new();
        for dt in [0.04, 0.02, 0.01] {
            let mut f = [0, 1, 2, 3].map(|i| Tensor::from_fn(&[2, 2, 1], |_| c(y0[i])));
            source_step(&setup, &mats, &mut f, dt, eps, SourceScheme::CrankNicolson);
            let want = expm(dt, y0);
            let err = (0..4)
                .map(|i| (f[i].data()[0].re - want[i]).abs())
                .fold(0.0, f64::max);
            errs.push(err);
            // the exact scheme matches the exponential
            let mut f = [0, 1, 2, 3].map(|i| Tensor::from_fn(&[2, 2, 1], |_| c(y0[i])));
            source_step(&setup, &mats, &mut f, dt, eps, SourceScheme::Exact);
            for i in 0..4 {
                assert!((f[i].data()[0].re - want[i]).abs() < 1e-13);
            }
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order > 2.7, "local error order {order}");
        }
    }

    #[test]
    fn mass_is_conserved_over_a_run() {
        let prob = HoppingProblem::example41(1.0);
        let cfg = HoppingConfig {
            nx: 16,
            np: 16,
            t_final: 0.05,
            dt: 1e-2,
            ..Default::default()
        };
        let run = hopping_direct_run(&prob, &cfg).unwrap();
        let m0 = run.mass[0];
        for m in &run.mass {
            assert!(((m - m0) / m0).abs() < 1e-6);
        }
        for f in &run.fields {
            assert!(f.max_imag() < 1e-10);
        }
    }
}
