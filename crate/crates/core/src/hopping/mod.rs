//! Two-band semiclassical surface hopping with a random band gap: direct
//! Galerkin, the two geometric-optics Galerkin solvers and collocation.

mod direct;
mod initial;
mod ngo;
mod phase;
mod problem;
mod refine;

pub use direct::{hopping_direct_run, solve_hopping_direct, DirectRun, SourceStepper};
pub use initial::{prepare_initial_hopping, well_prepared};
pub use ngo::{solve_hopping_n1, solve_hopping_n2};
pub use phase::{solve_phase_hopping, HoppingPhase};
pub use problem::{HoppingConfig, HoppingProblem, ProfileSource, SourceScheme};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::chaos::{QuadratureRule, SymEigen};
use crate::error::Result;
use crate::moments::{MomentProfile, Observable};
use crate::spectral::{exact_advect_fourier, Generator, Tensor};
use problem::HoppingSetup;
use refine::FineMomentum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HoppingMethod {
    Direct,
    N1,
    N2,
}

/// Samples at the statistics nodes of the `p = 0` slices of `f+`, `f-`,
/// `f^i` and of the three densities, all stored `[j * nodes.len() + l]`.
/// `p` holds the momentum nodes the densities were summed over.
#[derive(Debug, Clone)]
pub struct HoppingOutcome {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    /// Index of the momentum node closest to 0.
    pub p0: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub slice_plus: Vec<f64>,
    pub slice_minus: Vec<f64>,
    pub slice_inter: Vec<Complex64>,
    pub rho_plus: Vec<f64>,
    pub rho_minus: Vec<f64>,
    pub rho_inter: Vec<Complex64>,
}

/// Index of the grid node with the smallest `|p|`.
fn zero_momentum_index(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// `rho = sum_k f(p_k) dp`, the rectangle rule on the periodic momentum grid.
pub fn density<T>(f: &[T], dp: f64) -> T
where
    T: Copy + std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
{
    f.iter().copied().sum::<T>() * dp
}

/// Densities of a field sampled as `f[j * np + k]`.
pub fn densities<T>(f: &[T], np: usize, dp: f64) -> Vec<T>
where
    T: Copy + std::iter::Sum<T> + std::ops::Mul<f64, Output = T>,
{
    f.chunks(np).map(|row| density(row, dp)).collect()
}

impl HoppingOutcome {
    /// From pointwise values `(f+, f-, f^i)` on the (possibly refined)
    /// momentum grid, stored `[(j * np + k) * ns + l]`.
    pub(crate) fn from_values(
        setup: &HoppingSetup,
        fine: &FineMomentum,
        values: &[(f64, f64, Complex64)],
    ) -> Self {
        let (nx, np, ns) = (setup.nx(), fine.len(), setup.recon.node_count());
        let p = fine.nodes();
        let p0 = zero_momentum_index(&p);
        let dp = fine.spacing();
        let mut out = HoppingOutcome {
            x: setup.xg.nodes(),
            p,
            p0,
            nodes: setup.recon.nodes().to_vec(),
            weights: setup.recon.weights().to_vec(),
            slice_plus: vec![0.0; nx * ns],
            slice_minus: vec![0.0; nx * ns],
            slice_inter: vec![Complex64::new(0.0, 0.0); nx * ns],
            rho_plus: vec![0.0; nx * ns],
            rho_minus: vec![0.0; nx * ns],
            rho_inter: vec![Complex64::new(0.0, 0.0); nx * ns],
        };
        for j in 0..nx {
            for l in 0..ns {
                let at = |k: usize| values[(j * np + k) * ns + l];
                let idx = j * ns + l;
                let (a, b, c) = at(p0);
                out.slice_plus[idx] = a;
                out.slice_minus[idx] = b;
                out.slice_inter[idx] = c;
                let row: Vec<_> = (0..np).map(at).collect();
                out.rho_plus[idx] = density(&row.iter().map(|v| v.0).collect::<Vec<_>>(), dp);
                out.rho_minus[idx] = density(&row.iter().map(|v| v.1).collect::<Vec<_>>(), dp);
                out.rho_inter[idx] = density(&row.iter().map(|v| v.2).collect::<Vec<_>>(), dp);
            }
        }
        out
    }

    pub(crate) fn build(
        setup: &HoppingSetup,
        eval: impl Fn(usize, usize, usize) -> (f64, f64, Complex64) + Sync,
    ) -> Self {
        let (np, ns) = (setup.np(), setup.recon.node_count());
        let values: Vec<_> = (0..setup.nx() * np * ns)
            .into_par_iter()
            .map(|idx| {
                let (site, l) = (idx / ns, idx % ns);
                eval(site / np, site % np, l)
            })
            .collect();
        Self::from_values(setup, &FineMomentum::new(&setup.pg, 1), &values)
    }

    /// Mean and standard deviation of `f_plus`, `f_minus`, `re_f_i`,
    /// `im_f_i` (at `p = 0`) and `rho_plus`, `rho_minus`, `re_rho_i`,
    /// `im_rho_i`, all as real observables.
    pub fn moments(&self) -> MomentProfile {
        let real = |name: &str, v: &[f64]| {
            let c: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
            Observable::from_samples(name, &c, &self.weights)
        };
        let re = |v: &[Complex64]| v.iter().map(|c| c.re).collect::<Vec<_>>();
        let im = |v: &[Complex64]| v.iter().map(|c| c.im).collect::<Vec<_>>();
        MomentProfile {
            x: self.x.clone(),
            observables: vec![
                real("f_plus", &self.slice_plus),
                real("f_minus", &self.slice_minus),
                real("re_f_i", &re(&self.slice_inter)),
                real("im_f_i", &im(&self.slice_inter)),
                real("rho_plus", &self.rho_plus),
                real("rho_minus", &self.rho_minus),
                real("re_rho_i", &re(&self.rho_inter)),
                real("im_rho_i", &im(&self.rho_inter)),
            ],
        }
    }
}

/// Exact `x`-transport with speed `p` of a `[nx, np, (ntau,) K]` field.
pub(crate) fn advect_space(field: &mut Tensor, setup: &HoppingSetup, h: f64) {
    let np = setup.np();
    let inner = field.len() / (setup.nx() * np * field.modes());
    let p = setup.pg.nodes();
    let speed = move |v: usize| p[(v / inner) % np];
    exact_advect_fourier(field, 0, &setup.xg, &Generator::Scalar(&speed), h);
}

/// Exact `p`-transport with generator `sign * Gal(E_x)` (per `x`).
pub(crate) fn advect_momentum(
    field: &mut Tensor,
    setup: &HoppingSetup,
    gal_dx: &[SymEigen],
    sign: f64,
    h: f64,
) {
    let np = setup.np();
    let inner = field.len() / (setup.nx() * np * field.modes());
    let site = move |v: usize| (v / (inner * np), sign);
    exact_advect_fourier(
        field,
        1,
        &setup.pg,
        &Generator::Matrix {
            eig: gal_dx,
            site: &site,
        },
        h,
    );
}

pub fn solve_hopping(
    problem: &HoppingProblem,
    cfg: &HoppingConfig,
    method: HoppingMethod,
) -> Result<HoppingOutcome> {
    match method {
        HoppingMethod::Direct => solve_hopping_direct(problem, cfg),
        HoppingMethod::N1 => solve_hopping_n1(problem, cfg),
        HoppingMethod::N2 => solve_hopping_n2(problem, cfg),
    }
}

fn run_at(
    problem: &HoppingProblem,
    setup: &HoppingSetup,
    cfg: &HoppingConfig,
    method: HoppingMethod,
) -> Result<HoppingOutcome> {
    match method {
        HoppingMethod::Direct => {
            let run = direct::run_direct(problem, setup, cfg)?;
            Ok(direct::outcome_from_fields(setup, &run.fields))
        }
        HoppingMethod::N1 => ngo::run_n1(problem, setup, cfg),
        HoppingMethod::N2 => ngo::run_n2(problem, setup, cfg),
    }
}

/// Stochastic collocation on `nc` Gauss nodes of the random gap.
pub fn solve_hopping_collocation(
    problem: &HoppingProblem,
    cfg: &HoppingConfig,
    inner: HoppingMethod,
    nc: usize,
) -> Result<HoppingOutcome> {
    let rule = QuadratureRule::gauss(problem.family, nc)?;
    let runs: Vec<HoppingOutcome> = rule
        .nodes()
        .par_iter()
        .map(|&z| {
            let setup = HoppingSetup::point(problem, cfg, z)?;
            run_at(problem, &setup, cfg, inner)
        })
        .collect::<Result<_>>()?;
    let nx = cfg.nx;
    let first = &runs[0];
    let mut out = HoppingOutcome {
        x: first.x.clone(),
        p: first.p.clone(),
        p0: first.p0,
        nodes: rule.nodes().to_vec(),
        weights: rule.weights().to_vec(),
        slice_plus: vec![0.0; nx * nc],
        slice_minus: vec![0.0; nx * nc],
        slice_inter: vec![Complex64::new(0.0, 0.0); nx * nc],
        rho_plus: vec![0.0; nx * nc],
        rho_minus: vec![0.0; nx * nc],
        rho_inter: vec![Complex64::new(0.0, 0.0); nx * nc],
    };
    for (l, run) in runs.iter().enumerate() {
        for j in 0..nx {
            let idx = j * nc + l;
            out.slice_plus[idx] = run.slice_plus[j];
            out.slice_minus[idx] = run.slice_minus[j];
            out.slice_inter[idx] = run.slice_inter[j];
            out.rho_plus[idx] = run.rho_plus[j];
            out.rho_minus[idx] = run.rho_minus[j];
            out.rho_inter[idx] = run.rho_inter[j];
        }
    }
    Ok(out)
}
