use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;

use super::initial::prepare_initial_hopping;
use super::phase::{solve_phase_hopping, HoppingPhase};
use super::problem::{HoppingConfig, HoppingProblem, HoppingSetup, ProfileSource};
use super::refine::FineMomentum;
use super::{advect_momentum, advect_space, HoppingOutcome};
use crate::chaos::{GalerkinMatrix, SymEigen};
use crate::error::{Error, Result};
use crate::scalar::Splitting;
use crate::spectral::{
    apply_site_matrices, backward_euler_tau, rk3_transport_step, trig_weights, Generator,
    PeriodicGrid, Tensor,
};

const MIN_SPEED: f64 = 1e-14;

/// Profile equations in physical time: exact transports, exact interband
/// source and the backward-Euler fast-phase step with band-dependent
/// Galerkin generators.
pub fn solve_hopping_n1(problem: &HoppingProblem, cfg: &HoppingConfig) -> Result<HoppingOutcome> {
    let setup = HoppingSetup::new(problem, cfg)?;
    run_n1(problem, &setup, cfg)
}

/// Profile equations in the phase variable `s`.
pub fn solve_hopping_n2(problem: &HoppingProblem, cfg: &HoppingConfig) -> Result<HoppingOutcome> {
    let setup = HoppingSetup::new(problem, cfg)?;
    run_n2(problem, &setup, cfg)
}

/// Band speeds `2E - E_x S_p` and `2E + E_x S_p` at one node.
fn band_speeds(e: f64, e_dx: f64, sp: f64) -> (f64, f64) {
    (2.0 * e - e_dx * sp, 2.0 * e + e_dx * sp)
}

fn check_speed(v: f64, band: &str, site: usize, q: usize) -> Result<()> {
    if v > MIN_SPEED && v.is_finite() {
        Ok(())
    } else {
        Err(Error::singular(
            format!("band speed {band}"),
            format!("phase-space site {site}, node {q}: value {v:e}"),
        ))
    }
}

/// Symmetric Galerkin matrix `sum_l S_p,l D_lmk` of `E_x S_p` for every
/// phase-space site, contracted from the triple tensor of `E_x`.
pub(crate) fn coupling_matrices(
    setup: &HoppingSetup,
    phase: &HoppingPhase,
    n: usize,
    tensors: &[crate::chaos::TripleTensor],
) -> Vec<GalerkinMatrix> {
    let np = setup.np();
    (0..setup.nx() * np)
        .into_par_iter()
        .map(|site| tensors[site / np].contract_first(phase.sp_modes(n, site)))
        .collect()
}

/// Eigen-decompositions of `2 Gal(E) -+ H` per site, after checking that
/// both band speeds stay positive at every node.
fn band_generators(
    setup: &HoppingSetup,
    phase: &HoppingPhase,
    n: usize,
    gal_e: &[GalerkinMatrix],
    tensors: &[crate::chaos::TripleTensor],
) -> Result<(Vec<SymEigen>, Vec<SymEigen>)> {
    let np = setup.np();
    let coupling = coupling_matrices(setup, phase, n, tensors);
    let pairs: Vec<(SymEigen, SymEigen)> = coupling
        .par_iter()
        .enumerate()
        .map(|(site, hm)| -> Result<(SymEigen, SymEigen)> {
            let j = site / np;
            for q in 0..setup.ng() {
                let sp = phase.sp_at(n, site, setup.space.psi(q));
                let (up, down) = band_speeds(setup.gap_at(j)[q], setup.gap_dx_at(j)[q], sp);
                check_speed(up, "E+", site, q)?;
                check_speed(down, "E-", site, q)?;
            }
            let twice = gal_e[j].scaled(2.0);
            Ok((twice.axpy(-1.0, hm).eigen()?, twice.axpy(1.0, hm).eigen()?))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

struct N1Operators {
    tau: PeriodicGrid,
    phase: HoppingPhase,
    gal_dx: Vec<SymEigen>,
    gal_e: Vec<GalerkinMatrix>,
    gal_e_eig: Vec<SymEigen>,
    tensors: Vec<crate::chaos::TripleTensor>,
}

impl N1Operators {
    fn tau_step(
        &self,
        setup: &HoppingSetup,
        f: &mut [Tensor; 4],
        n: usize,
        h: f64,
        eps: f64,
    ) -> Result<()> {
        let (plus, minus) = band_generators(setup, &self.phase, n, &self.gal_e, &self.tensors)?;
        let nt = self.tau.len();
        let per_site = move |v: usize| (v / nt, 1.0);
        let np = setup.np();
        let per_x = move |v: usize| (v / (nt * np), 2.0);
        let mu = h / eps;
        backward_euler_tau(
            &mut f[0],
            2,
            &self.tau,
            &Generator::Matrix {
                eig: &plus,
                site: &per_site,
            },
            mu,
        );
        backward_euler_tau(
            &mut f[1],
            2,
            &self.tau,
            &Generator::Matrix {
                eig: &minus,
                site: &per_site,
            },
            mu,
        );
        let coherent = Generator::Matrix {
            eig: &self.gal_e_eig,
            site: &per_x,
        };
        backward_euler_tau(&mut f[2], 2, &self.tau, &coherent, mu);
        backward_euler_tau(&mut f[3], 2, &self.tau, &coherent, mu);
        Ok(())
    }

    fn transport(&self, setup: &HoppingSetup, f: &mut [Tensor; 4], h: f64) {
        for field in f.iter_mut() {
            advect_space(field, setup, h);
        }
        advect_momentum(&mut f[0], setup, &self.gal_dx, -1.0, h);
        advect_momentum(&mut f[1], setup, &self.gal_dx, 1.0, h);
    }
}

/// Exact flow of the profile source at every site, fast-phase node and
/// mode. With `D = F+ - F-` and `Q = G cos tau + H sin tau`, the pair
/// `(D, 2Q)` rotates at rate `2b`; `F+ + F-` is invariant and `G`, `H`
/// only move along `(cos tau, sin tau)`.
fn n1_source(setup: &HoppingSetup, tau: &PeriodicGrid, f: &mut [Tensor; 4], h: f64) {
    let nt = tau.len();
    let k = f[0].modes();
    let trig: Vec<(f64, f64)> = tau.nodes().iter().map(|t| t.sin_cos()).collect();
    let [fp, fm, g, hh] = f;
    fp.data_mut()
        .par_chunks_mut(k)
        .zip(fm.data_mut().par_chunks_mut(k))
        .zip(g.data_mut().par_chunks_mut(k))
        .zip(hh.data_mut().par_chunks_mut(k))
        .enumerate()
        .for_each(|(v, (((a, b), c), d))| {
            let (s, co) = trig[v % nt];
            let (sn, cs) = (2.0 * setup.coupling[v / nt] * h).sin_cos();
            for m in 0..k {
                let jump = a[m] - b[m];
                let sum = a[m] + b[m];
                let q0 = c[m] * co + d[m] * s;
                let jump_new = jump * cs + q0 * (2.0 * sn);
                let q = q0 * cs - jump * (0.5 * sn);
                a[m] = (sum + jump_new) * 0.5;
                b[m] = (sum - jump_new) * 0.5;
                c[m] += (q - q0) * co;
                d[m] += (q - q0) * s;
            }
        });
}

pub(crate) fn run_n1(
    problem: &HoppingProblem,
    setup: &HoppingSetup,
    cfg: &HoppingConfig,
) -> Result<HoppingOutcome> {
    let tau = PeriodicGrid::tau(cfg.ntau)?;
    let nx = setup.nx();
    let phase = solve_phase_hopping(
        problem,
        &setup.space,
        &setup.xg,
        &setup.pg,
        cfg.dt,
        cfg.t_final,
    )?;
    let mut f = prepare_initial_hopping(problem, &setup.space, &setup.xg, &setup.pg, &tau)?;
    let mut gal_dx = Vec::with_capacity(nx);
    let mut gal_e = Vec::with_capacity(nx);
    let mut gal_e_eig = Vec::with_capacity(nx);
    let mut tensors = Vec::with_capacity(nx);
    for j in 0..nx {
        gal_dx.push(setup.space.matrix_from_nodal(setup.gap_dx_at(j))?.eigen()?);
        let e = setup.space.matrix_from_nodal(setup.gap_at(j))?;
        gal_e_eig.push(e.eigen()?);
        gal_e.push(e);
        tensors.push(setup.space.tensor_from_nodal(setup.gap_dx_at(j))?);
    }
    let ops = N1Operators {
        tau,
        phase,
        gal_dx,
        gal_e,
        gal_e_eig,
        tensors,
    };
    let eps = problem.eps;
    let (steps, h) = cfg.steps();
    for n in 0..steps {
        match cfg.splitting {
            Splitting::Lie => {
                ops.transport(setup, &mut f, h);
                n1_source(setup, &ops.tau, &mut f, h);
                ops.tau_step(setup, &mut f, n + 1, h, eps)?;
            }
            Splitting::Strang => {
                ops.tau_step(setup, &mut f, n, 0.5 * h, eps)?;
                n1_source(setup, &ops.tau, &mut f, 0.5 * h);
                ops.transport(setup, &mut f, h);
                n1_source(setup, &ops.tau, &mut f, 0.5 * h);
                ops.tau_step(setup, &mut f, n + 1, 0.5 * h, eps)?;
            }
        }
    }
    let fine = FineMomentum::new(&setup.pg, cfg.density_refine);
    let phase = &ops.phase;
    let (nt, ns, nf) = (ops.tau.len(), setup.recon.node_count(), fine.len());
    let values: Vec<(f64, f64, Complex64)> = (0..setup.nx() * nf * ns)
        .into_par_iter()
        .map(|idx| {
            let (j, fi, l) = (idx / (nf * ns), (idx / ns) % nf, idx % ns);
            let samples: Vec<[f64; 4]> = (0..nt)
                .map(|i| fine_sample(&f, setup, &fine, j, fi, l, i, nt))
                .collect();
            assemble_point(
                &samples,
                &ops.tau,
                fine_phase(setup, phase, &fine, phase.steps(), j, fi, l),
                eps,
            )
        })
        .collect();
    Ok(HoppingOutcome::from_values(setup, &fine, &values))
}

/// The four profile values at site `site`, reconstruction node `l` and
/// fast-phase node `i` of `[nx, np, ntau, K]` fields.
fn sample(
    f: &[Tensor; 4],
    setup: &HoppingSetup,
    site: usize,
    l: usize,
    i: usize,
    nt: usize,
) -> [f64; 4] {
    let k = setup.k();
    let psi = setup.recon.psi(l);
    let off = (site * nt + i) * k;
    let ev = |t: &Tensor| -> f64 {
        t.data()[off..off + k]
            .iter()
            .zip(psi)
            .map(|(c, p)| c.re * p)
            .sum()
    };
    [ev(&f[0]), ev(&f[1]), ev(&f[2]), ev(&f[3])]
}

/// Profile values at fine momentum node `fi` of x-index `j`.
#[allow(clippy::too_many_arguments)]
fn fine_sample(
    f: &[Tensor; 4],
    setup: &HoppingSetup,
    fine: &FineMomentum,
    j: usize,
    fi: usize,
    l: usize,
    i: usize,
    nt: usize,
) -> [f64; 4] {
    let np = setup.np();
    fine.interpolate(fi, |k| sample(f, setup, j * np + k, l, i, nt))
}

/// Phase at step `n`, fine momentum node `fi` of x-index `j`, evaluated at
/// reconstruction node `l`.
fn fine_phase(
    setup: &HoppingSetup,
    phase: &HoppingPhase,
    fine: &FineMomentum,
    n: usize,
    j: usize,
    fi: usize,
    l: usize,
) -> f64 {
    let np = setup.np();
    let psi = setup.recon.psi(l);
    fine.hermite(
        fi,
        |k| phase.s_at(n, j * np + k, psi),
        |k| phase.sp_at(n, j * np + k, psi),
    )
}

/// `f+- = F+-(tau*)`, `f^i = e^{-i tau*} (G + i H)(tau*)` with `tau* = S/eps`.
fn assemble_point(
    samples: &[[f64; 4]],
    tau: &PeriodicGrid,
    s: f64,
    eps: f64,
) -> (f64, f64, Complex64) {
    let t_star = s / eps;
    let w = trig_weights(samples.len(), tau.lo(), t_star);
    let mut acc = [0.0; 4];
    for (wi, smp) in w.iter().zip(samples) {
        for c in 0..4 {
            acc[c] += wi.re * smp[c];
        }
    }
    let rot = Complex64::from_polar(1.0, -t_star.rem_euclid(2.0 * std::f64::consts::PI));
    (acc[0], acc[1], rot * Complex64::new(acc[2], acc[3]))
}

/// Largest characteristic speeds `(|p| / band speed, |E_x| / band speed)`
/// over the whole phase history.
fn transport_speed_bounds(setup: &HoppingSetup, phase: &HoppingPhase) -> Result<(f64, f64)> {
    let np = setup.np();
    let p = setup.pg.nodes();
    let pmax = p.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    (0..setup.nx() * np)
        .into_par_iter()
        .map(|site| -> Result<(f64, f64)> {
            let j = site / np;
            let (mut lx, mut lp) = (0.0f64, 0.0f64);
            for n in 0..=phase.steps() {
                for q in 0..setup.ng() {
                    let e = setup.gap_at(j)[q];
                    let ex = setup.gap_dx_at(j)[q];
                    let (up, down) = band_speeds(e, ex, phase.sp_at(n, site, setup.space.psi(q)));
                    check_speed(up, "E+", site, q)?;
                    check_speed(down, "E-", site, q)?;
                    let slow = up.min(down).min(2.0 * e);
                    lx = lx.max(p[site % np].abs() / slow);
                    lp = lp.max(ex.abs() / up.min(down));
                }
            }
            let _ = pmax;
            Ok((lx, lp))
        })
        .try_reduce(|| (0.0, 0.0), |a, b| Ok((a.0.max(b.0), a.1.max(b.1))))
}

/// Phase-variable step: the requested (or default `dt * mean(2E)`) value,
/// capped by half the explicit transport stability bound.
pub(crate) fn phase_step(
    setup: &HoppingSetup,
    phase: &HoppingPhase,
    cfg: &HoppingConfig,
) -> Result<f64> {
    let mean_gap = setup.gap.iter().sum::<f64>() / setup.gap.len() as f64;
    let ds = cfg.ds.unwrap_or(cfg.dt * 2.0 * mean_gap);
    let (lx, lp) = transport_speed_bounds(setup, phase)?;
    let cap = 0.5
        * (setup.xg.spacing() / lx.max(f64::MIN_POSITIVE))
            .min(setup.pg.spacing() / lp.max(f64::MIN_POSITIVE));
    if ds > cap {
        warn!("phase step {ds:e} exceeds the transport stability bound; using {cap:e}");
        Ok(cap)
    } else {
        Ok(ds)
    }
}

/// Per-(site, node) position in the time history, advanced monotonically
/// as the phase level `s` increases.
struct PhaseCursor {
    index: Vec<usize>,
}

impl PhaseCursor {
    fn new(len: usize) -> Self {
        PhaseCursor {
            index: vec![0; len],
        }
    }

    /// `S_p` at the time `t*` where `S(t*) = s` for every site and Galerkin
    /// node, `[site * ng + q]`. Nodes whose final phase is below `s` use the
    /// final time.
    fn momentum_derivative(
        &mut self,
        setup: &HoppingSetup,
        phase: &HoppingPhase,
        s: f64,
    ) -> Result<Vec<f64>> {
        let ng = setup.ng();
        let last = phase.steps();
        let mut out = vec![0.0; self.index.len()];
        out.par_chunks_mut(ng)
            .zip(self.index.par_chunks_mut(ng))
            .enumerate()
            .try_for_each(|(site, (row, cur))| -> Result<()> {
                for q in 0..ng {
                    let psi = setup.space.psi(q);
                    let mut n = cur[q];
                    while n < last && phase.s_at(n + 1, site, psi) < s {
                        n += 1;
                    }
                    cur[q] = n;
                    if n == last {
                        row[q] = phase.sp_at(last, site, psi);
                        continue;
                    }
                    let (s0, s1) = (phase.s_at(n, site, psi), phase.s_at(n + 1, site, psi));
                    if !(s1 > s0) || s < s0 {
                        return Err(Error::PhaseInversion(format!(
                            "no bracket for s = {s} at site {site}, node {q} (S = {s0}, {s1})"
                        )));
                    }
                    let w = (s - s0) / (s1 - s0);
                    row[q] =
                        phase.sp_at(n, site, psi) * (1.0 - w) + phase.sp_at(n + 1, site, psi) * w;
                }
                Ok(())
            })?;
        Ok(out)
    }
}

/// Galerkin matrices at one phase level, row-major `K x K` blocks per site.
struct PhaseMatrices {
    inv_plus: Vec<f64>,
    inv_minus: Vec<f64>,
    force_plus: Vec<f64>,
    force_minus: Vec<f64>,
}

impl PhaseMatrices {
    fn assemble(setup: &HoppingSetup, sp: &[f64]) -> Result<Self> {
        let (np, k, ng) = (setup.np(), setup.k(), setup.ng());
        let sites = setup.nx() * np;
        let mut m = PhaseMatrices {
            inv_plus: vec![0.0; sites * k * k],
            inv_minus: vec![0.0; sites * k * k],
            force_plus: vec![0.0; sites * k * k],
            force_minus: vec![0.0; sites * k * k],
        };
        let kk = k * k;
        m.inv_plus
            .par_chunks_mut(kk)
            .zip(m.inv_minus.par_chunks_mut(kk))
            .zip(m.force_plus.par_chunks_mut(kk))
            .zip(m.force_minus.par_chunks_mut(kk))
            .enumerate()
            .try_for_each(|(site, (((a, b), c), d))| -> Result<()> {
                let j = site / np;
                let mut w = [vec![0.0; ng], vec![0.0; ng], vec![0.0; ng], vec![0.0; ng]];
                for q in 0..ng {
                    let ex = setup.gap_dx_at(j)[q];
                    let (up, down) = band_speeds(setup.gap_at(j)[q], ex, sp[site * ng + q]);
                    check_speed(up, "E+", site, q)?;
                    check_speed(down, "E-", site, q)?;
                    w[0][q] = 1.0 / up;
                    w[1][q] = 1.0 / down;
                    w[2][q] = ex / up;
                    w[3][q] = ex / down;
                }
                setup.space.matrix_from_nodal_into(&w[0], a)?;
                setup.space.matrix_from_nodal_into(&w[1], b)?;
                setup.space.matrix_from_nodal_into(&w[2], c)?;
                setup.space.matrix_from_nodal_into(&w[3], d)
            })?;
        Ok(m)
    }
}

/// Source rates of `(W1, W2, W3, W4)`, interleaved `[vector][field][mode]`.
fn n2_source_rate(
    setup: &HoppingSetup,
    m: &PhaseMatrices,
    half_gap: &[f64],
    trig: &[(f64, f64)],
    w: &[Tensor; 4],
) -> Vec<Complex64> {
    let k = setup.k();
    let nt = trig.len();
    let np = setup.np();
    let kk = k * k;
    let mut rate = vec![Complex64::new(0.0, 0.0); 4 * w[0].len()];
    rate.par_chunks_mut(4 * k).enumerate().for_each(|(v, r)| {
        let site = v / nt;
        let j = site / np;
        let (s, c) = trig[v % nt];
        let b = setup.coupling[site];
        let at = |t: &Tensor, m: usize| t.data()[v * k + m];
        let q: Vec<Complex64> = (0..k)
            .map(|m| at(&w[2], m) * c + at(&w[3], m) * s)
            .collect();
        let jump: Vec<Complex64> = (0..k).map(|m| at(&w[1], m) - at(&w[0], m)).collect();
        let (ip, im) = (
            &m.inv_plus[site * kk..(site + 1) * kk],
            &m.inv_minus[site * kk..(site + 1) * kk],
        );
        let hg = &half_gap[j * kk..(j + 1) * kk];
        for row in 0..k {
            let (mut a, mut bb, mut hj) = (
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
            );
            for col in 0..k {
                a += q[col] * ip[row * k + col];
                bb += q[col] * im[row * k + col];
                hj += jump[col] * hg[row * k + col];
            }
            r[row] = a * (2.0 * b);
            r[k + row] = bb * (-2.0 * b);
            r[2 * k + row] = hj * (b * c);
            r[3 * k + row] = hj * (b * s);
        }
    });
    rate
}

fn add_rate(w: &mut [Tensor; 4], rate: &[Complex64], h: f64) {
    let k = w[0].modes();
    for (f, field) in w.iter_mut().enumerate() {
        field
            .data_mut()
            .par_chunks_mut(k)
            .enumerate()
            .for_each(|(v, x)| {
                let r = &rate[(4 * v + f) * k..(4 * v + f + 1) * k];
                for (a, b) in x.iter_mut().zip(r) {
                    *a += b * h;
                }
            });
    }
}

pub(crate) fn run_n2(
    problem: &HoppingProblem,
    setup: &HoppingSetup,
    cfg: &HoppingConfig,
) -> Result<HoppingOutcome> {
    let tau = PeriodicGrid::tau(cfg.ntau)?;
    let (nx, np, k, nt, ns) = (
        setup.nx(),
        setup.np(),
        setup.k(),
        tau.len(),
        setup.recon.node_count(),
    );
    let sites = nx * np;
    let eps = problem.eps;
    let phase = solve_phase_hopping(
        problem,
        &setup.space,
        &setup.xg,
        &setup.pg,
        cfg.dt,
        cfg.t_final,
    )?;
    let last = phase.steps();

    // reconstruction targets S(T) at every site and node
    let fine = FineMomentum::new(&setup.pg, cfg.density_refine);
    let nf = fine.len();
    let points = nx * nf * ns;
    let targets: Vec<f64> = (0..points)
        .into_par_iter()
        .map(|idx| {
            fine_phase(
                setup,
                &phase,
                &fine,
                last,
                idx / (nf * ns),
                (idx / ns) % nf,
                idx % ns,
            )
        })
        .collect();
    let s_star = targets.iter().fold(0.0f64, |a, &b| a.max(b)) * (1.0 + 1e-12);
    let ds = phase_step(setup, &phase, cfg)?;
    let steps = if s_star > 0.0 {
        (s_star / ds).floor() as usize + 1
    } else {
        0
    };

    let mut w = prepare_initial_hopping(problem, &setup.space, &setup.xg, &setup.pg, &tau)?;
    let mut values = vec![(0.0, 0.0, Complex64::new(0.0, 0.0)); points];
    let fill = |values: &mut [(f64, f64, Complex64)],
                ids: &[usize],
                prev: &[Tensor; 4],
                cur: &[Tensor; 4],
                s0: f64| {
        let out: Vec<(usize, (f64, f64, Complex64))> = ids
            .par_iter()
            .map(|&idx| {
                let (j, fi, l) = (idx / (nf * ns), (idx / ns) % nf, idx % ns);
                let wgt = if ds > 0.0 {
                    ((targets[idx] - s0) / ds).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let samples: Vec<[f64; 4]> = (0..nt)
                    .map(|i| {
                        let a = fine_sample(prev, setup, &fine, j, fi, l, i, nt);
                        let b = fine_sample(cur, setup, &fine, j, fi, l, i, nt);
                        [0, 1, 2, 3].map(|c| a[c] * (1.0 - wgt) + b[c] * wgt)
                    })
                    .collect();
                (idx, assemble_point(&samples, &tau, targets[idx], eps))
            })
            .collect();
        for (idx, v) in out {
            values[idx] = v;
        }
    };
    if steps == 0 {
        let all: Vec<usize> = (0..points).collect();
        fill(&mut values, &all, &w, &w, 0.0);
        return Ok(HoppingOutcome::from_values(setup, &fine, &values));
    }
    let mut buckets = vec![Vec::new(); steps];
    for (idx, &t) in targets.iter().enumerate() {
        let n = ((t / ds).floor() as usize).min(steps - 1);
        buckets[n].push(idx);
    }

    let mut half_gap = vec![0.0; nx * k * k];
    for j in 0..nx {
        let inv: Vec<f64> = setup.gap_at(j).iter().map(|e| 0.5 / e).collect();
        setup
            .space
            .matrix_from_nodal_into(&inv, &mut half_gap[j * k * k..(j + 1) * k * k])?;
    }
    let p = setup.pg.nodes();
    let trig: Vec<(f64, f64)> = tau.nodes().iter().map(|t| t.sin_cos()).collect();
    let one = |_: usize| 1.0;
    let unit = Generator::Scalar(&one);
    let mu = ds / eps;
    let strang = cfg.splitting == Splitting::Strang;
    let mut cursor = PhaseCursor::new(sites * setup.ng());

    for (n, bucket) in buckets.iter().enumerate() {
        let s0 = n as f64 * ds;
        let sp = cursor.momentum_derivative(setup, &phase, s0 + 0.5 * ds)?;
        let m = PhaseMatrices::assemble(setup, &sp)?;
        let prev = if bucket.is_empty() {
            None
        } else {
            Some(w.clone())
        };

        let source = |w: &mut [Tensor; 4], h: f64| match cfg.profile_source {
            ProfileSource::ForwardEuler => {
                let r = n2_source_rate(setup, &m, &half_gap, &trig, w);
                add_rate(w, &r, h);
            }
            ProfileSource::Midpoint => {
                let r = n2_source_rate(setup, &m, &half_gap, &trig, w);
                let mut mid = w.clone();
                add_rate(&mut mid, &r, 0.5 * h);
                let r = n2_source_rate(setup, &m, &half_gap, &trig, &mid);
                add_rate(w, &r, h);
            }
        };
        let transport = |w: &mut [Tensor; 4], h: f64| {
            let x_speed = |w: &mut Tensor, mats: &[f64], block: usize| {
                let speed = |d: &Tensor, out: &mut Tensor| {
                    apply_site_matrices(d, out, mats, |v| {
                        let site = v / nt;
                        (site / block, p[site % np])
                    })
                };
                rk3_transport_step(w, 0, &setup.xg, h, &speed);
            };
            x_speed(&mut w[0], &m.inv_plus, 1);
            x_speed(&mut w[1], &m.inv_minus, 1);
            x_speed(&mut w[2], &half_gap, np);
            x_speed(&mut w[3], &half_gap, np);
            let p_speed = |w: &mut Tensor, mats: &[f64], sign: f64| {
                let speed = |d: &Tensor, out: &mut Tensor| {
                    apply_site_matrices(d, out, mats, |v| (v / nt, sign))
                };
                rk3_transport_step(w, 1, &setup.pg, h, &speed);
            };
            p_speed(&mut w[0], &m.force_plus, -1.0);
            p_speed(&mut w[1], &m.force_minus, 1.0);
        };
        let fast = |w: &mut [Tensor; 4], mu: f64| {
            for field in w.iter_mut() {
                backward_euler_tau(field, 2, &tau, &unit, mu);
            }
        };
        if strang {
            fast(&mut w, 0.5 * mu);
            source(&mut w, 0.5 * ds);
            transport(&mut w, ds);
            source(&mut w, 0.5 * ds);
            fast(&mut w, 0.5 * mu);
        } else {
            transport(&mut w, ds);
            source(&mut w, ds);
            fast(&mut w, mu);
        }
        if let Some(prev) = prev {
            fill(&mut values, bucket, &prev, &w, s0);
        }
    }
    Ok(HoppingOutcome::from_values(setup, &fine, &values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn small(t_final: f64) -> HoppingConfig {
        HoppingConfig {
            nx: 16,
            np: 16,
            k: 3,
            ntau: 8,
            t_final,
            ns: 4,
            dt: 1e-2,
            ..Default::default()
        }
    }

    #[test]
    fn zero_time_reconstruction_is_initial_data() {
        let prob = HoppingProblem::example41(0.05);
        let cfg = small(0.0);
        for n2 in [false, true] {
            let out = if n2 {
                solve_hopping_n2(&prob, &cfg)
            } else {
                solve_hopping_n1(&prob, &cfg)
            }
            .unwrap();
            let j0 = out.p0;
            for j in 0..16 {
                let x = out.x[j];
                for l in 0..4 {
                    let idx = j * 4 + l;
                    assert!((out.slice_plus[idx] - (prob.f_plus)(x, out.p[j0])).abs() < 1e-10);
                    assert!((out.slice_minus[idx] - (prob.f_minus)(x, out.p[j0])).abs() < 1e-10);
                    assert!((out.slice_inter[idx] - (prob.f_inter)(x, out.p[j0])).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn coupling_matrices_are_symmetric() {
        let prob = HoppingProblem::example41(0.01);
        let cfg = small(0.2);
        let setup = HoppingSetup::new(&prob, &cfg).unwrap();
        let phase = solve_phase_hopping(
            &prob,
            &setup.space,
            &setup.xg,
            &setup.pg,
            cfg.dt,
            cfg.t_final,
        )
        .unwrap();
        let tensors: Vec<_> = (0..16)
            .map(|j| setup.space.tensor_from_nodal(setup.gap_dx_at(j)).unwrap())
            .collect();
        for n in [0, 5, phase.steps()] {
            for m in coupling_matrices(&setup, &phase, n, &tensors) {
                assert!(m.max_asymmetry() < 1e-12);
            }
        }
    }

    /// The contracted tensor equals the Galerkin matrix of the nodal product.
    #[test]
    fn coupling_matrix_is_galerkin_of_product() {
        let prob = HoppingProblem::example41(0.01);
        let cfg = small(0.3);
        let setup = HoppingSetup::new(&prob, &cfg).unwrap();
        let phase = solve_phase_hopping(
            &prob,
            &setup.space,
            &setup.xg,
            &setup.pg,
            cfg.dt,
            cfg.t_final,
        )
        .unwrap();
        let site = 5 * 16 + 3;
        let t = setup.space.tensor_from_nodal(setup.gap_dx_at(5)).unwrap();
        let got = t.contract_first(phase.sp_modes(phase.steps(), site));
        let nodal: Vec<f64> = (0..setup.ng())
            .map(|q| setup.gap_dx_at(5)[q] * phase.sp_at(phase.steps(), site, setup.space.psi(q)))
            .collect();
        let want = setup.space.matrix_from_nodal(&nodal).unwrap();
        for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_profile_source_conserves_band_sum_and_matches_small_steps() {
        let prob = HoppingProblem::example41(0.1);
        let cfg = small(0.1);
        let setup = HoppingSetup::new(&prob, &cfg).unwrap();
        let tau = PeriodicGrid::tau(8).unwrap();
        let f0 = prepare_initial_hopping(&prob, &setup.space, &setup.xg, &setup.pg, &tau).unwrap();
        let mut once = f0.clone();
        n1_source(&setup, &tau, &mut once, 0.3);
        let mut many = f0.clone();
        for _ in 0..3000 {
            // forward Euler on the same linear system
            let (nt, k) = (8, 3);
            let trig: Vec<(f64, f64)> = tau.nodes().iter().map(|t| t.sin_cos()).collect();
            let snapshot = many.clone();
            for v in 0..snapshot[0].len() / k {
                let (s, c) = trig[v % nt];
                let b = setup.coupling[v / nt];
                for m in 0..k {
                    let i = v * k + m;
                    let at = |f: usize| snapshot[f].data()[i];
                    let q = at(2) * c + at(3) * s;
                    let d = at(0) - at(1);
                    let h = 0.3 / 3000.0;
                    many[0].data_mut()[i] += q * (2.0 * b * h);
                    many[1].data_mut()[i] -= q * (2.0 * b * h);
                    many[2].data_mut()[i] -= d * (b * c * h);
                    many[3].data_mut()[i] -= d * (b * s * h);
                }
            }
        }
        for f in 0..4 {
            assert!(once[f].max_abs_diff(&many[f]) < 1e-4, "field {f}");
        }
        for i in 0..once[0].len() {
            let a = once[0].data()[i] + once[1].data()[i];
            let b = f0[0].data()[i] + f0[1].data()[i];
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn tau_step_never_increases_norm() {
        let prob = HoppingProblem::example41(0.01);
        let cfg = small(0.3);
        let setup = HoppingSetup::new(&prob, &cfg).unwrap();
        let phase = solve_phase_hopping(
            &prob,
            &setup.space,
            &setup.xg,
            &setup.pg,
            cfg.dt,
            cfg.t_final,
        )
        .unwrap();
        let tau = PeriodicGrid::tau(8).unwrap();
        let mut f =
            prepare_initial_hopping(&prob, &setup.space, &setup.xg, &setup.pg, &tau).unwrap();
        let mut gal_e = Vec::new();
        let mut gal_e_eig = Vec::new();
        let mut tensors = Vec::new();
        let mut gal_dx = Vec::new();
        for j in 0..16 {
            let e = setup.space.matrix_from_nodal(setup.gap_at(j)).unwrap();
            gal_e_eig.push(e.eigen().unwrap());
            gal_e.push(e);
            tensors.push(setup.space.tensor_from_nodal(setup.gap_dx_at(j)).unwrap());
            gal_dx.push(
                setup
                    .space
                    .matrix_from_nodal(setup.gap_dx_at(j))
                    .unwrap()
                    .eigen()
                    .unwrap(),
            );
        }
        let ops = N1Operators {
            tau,
            phase,
            gal_dx,
            gal_e,
            gal_e_eig,
            tensors,
        };
        for h in [1e-3, 0.1, 10.0] {
            let before: Vec<f64> = f.iter().map(|t| t.norm_l2()).collect();
            ops.tau_step(&setup, &mut f, ops.phase.steps(), h, prob.eps)
                .unwrap();
            for (t, b) in f.iter().zip(before) {
                assert!(t.norm_l2() <= b * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn vanishing_band_speed_is_reported() {
        let mut prob = HoppingProblem::example41(0.01);
        // E_x S_p eventually exceeds 2E for a tiny gap with a steep slope
        prob.gap = Arc::new(|x: f64, _| 1e-3 + 0.5 * (1.0 + x.sin()));
        prob.gap_dx = Arc::new(|x: f64, _| 0.5 * x.cos());
        let cfg = HoppingConfig {
            t_final: 3.0,
            ..small(3.0)
        };
        let err = solve_hopping_n1(&prob, &cfg).unwrap_err();
        assert!(matches!(err, Error::SingularWeight { .. }), "{err}");
    }

    /// No coupling and a constant gap: `f^i` is transported by `p` and its
    /// modulus follows the initial data along characteristics.
    #[test]
    fn decoupled_coherence_is_advected() {
        let mut prob = HoppingProblem::example41(0.02);
        prob.coupling = Arc::new(|_, _| 0.0);
        prob.gap = Arc::new(|_, z| 1.0 + 0.3 * z);
        prob.gap_dx = Arc::new(|_, _| 0.0);
        let cfg = HoppingConfig {
            nx: 32,
            np: 16,
            k: 3,
            ns: 3,
            t_final: 0.4,
            dt: 1e-3,
            ..Default::default()
        };
        let out = solve_hopping_n2(&prob, &cfg).unwrap();
        let p0 = out.p[out.p0];
        for j in 0..32 {
            let want = (prob.f_inter)(out.x[j] - p0 * 0.4, p0).norm();
            for l in 0..3 {
                assert!((out.slice_inter[j * 3 + l].norm() - want).abs() < 5e-3);
            }
        }
    }

    /// Same setting, densities summed on a refined momentum grid: the
    /// transported coherence integrated by a fine rectangle rule.
    #[test]
    fn refined_density_of_decoupled_coherence() {
        let mut prob = HoppingProblem::example41(0.02);
        prob.coupling = Arc::new(|_, _| 0.0);
        prob.gap = Arc::new(|_, z| 1.0 + 0.3 * z);
        prob.gap_dx = Arc::new(|_, _| 0.0);
        let t = 0.4;
        let cfg = HoppingConfig {
            nx: 32,
            np: 16,
            k: 3,
            ns: 3,
            t_final: t,
            dt: 1e-3,
            density_refine: 4,
            ..Default::default()
        };
        for out in [
            solve_hopping_n1(&prob, &cfg).unwrap(),
            solve_hopping_n2(&prob, &cfg).unwrap(),
        ] {
            assert_eq!(out.p.len(), 64);
            let dp = out.p[1] - out.p[0];
            for j in (0..32).step_by(3) {
                let x = out.x[j];
                for (l, &z) in out.nodes.iter().enumerate() {
                    let phase = Complex64::from_polar(1.0, -2.0 * (1.0 + 0.3 * z) * t / prob.eps);
                    let want: Complex64 = out
                        .p
                        .iter()
                        .map(|&p| (prob.f_inter)(x - p * t, p))
                        .sum::<Complex64>()
                        * dp
                        * phase;
                    let got = out.rho_inter[j * 3 + l];
                    assert!((got - want).norm() < 5e-3, "{got} vs {want}");
                }
            }
        }
    }
}
