//! The scalar oscillatory transport equation: direct Galerkin, the two
//! geometric-optics Galerkin solvers and stochastic collocation.

mod direct;
mod initial;
mod ngo;
mod phase;
mod problem;

pub use direct::solve_direct;
pub use initial::{chapman_enskog_profile, prepare_initial_v};
pub use ngo::{reconstruct_u, solve_n1, solve_n2, Profile, ProfileRun};
pub use phase::{solve_phase_scalar, ScalarPhase};
pub use problem::{
    ComplexFn2, Nonlinearity, RealFn1, RealFn2, ScalarConfig, ScalarProblem, Splitting,
    TransportScheme,
};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::chaos::{GalerkinSpace, QuadratureRule};
use crate::error::Result;
use crate::moments::{MomentProfile, Observable};
use crate::spectral::{PeriodicGrid, Tensor};
pub(crate) use problem::time_steps;
use problem::ScalarSetup;

/// Solution strategy for the scalar model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarMethod {
    Direct,
    N1,
    N2,
}

/// Samples `u(T, x_j, z_l)` at the statistics nodes, plus the gPC
/// coefficients when the solver produced them directly.
#[derive(Debug, Clone)]
pub struct ScalarOutcome {
    pub x: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `values[j * nodes.len() + l]`
    pub values: Vec<Complex64>,
    /// `(K, coeffs[j * K + k])`
    pub coefficients: Option<(usize, Vec<Complex64>)>,
}

impl ScalarOutcome {
    pub(crate) fn from_coefficients(
        grid: &PeriodicGrid,
        recon: &GalerkinSpace,
        u: &Tensor,
    ) -> Self {
        let k = u.modes();
        let ns = recon.node_count();
        let mut values = Vec::with_capacity(grid.len() * ns);
        for j in 0..grid.len() {
            let c = &u.data()[j * k..(j + 1) * k];
            for l in 0..ns {
                values.push(recon.eval_at_node(c, l));
            }
        }
        ScalarOutcome {
            x: grid.nodes(),
            nodes: recon.nodes().to_vec(),
            weights: recon.weights().to_vec(),
            values,
            coefficients: Some((k, u.data().to_vec())),
        }
    }

    pub fn value(&self, j: usize, l: usize) -> Complex64 {
        self.values[j * self.nodes.len() + l]
    }

    /// Mean and standard deviation of `u`. Coefficient-based when gPC
    /// coefficients are available, quadrature-based otherwise.
    pub fn moments(&self) -> MomentProfile {
        let obs = match &self.coefficients {
            Some((k, c)) => Observable::from_coefficients("u", c, *k),
            None => Observable::from_samples("u", &self.values, &self.weights),
        };
        MomentProfile {
            x: self.x.clone(),
            observables: vec![obs],
        }
    }

    /// Quadrature statistics of the samples, regardless of how they were made.
    pub fn sample_moments(&self) -> MomentProfile {
        MomentProfile {
            x: self.x.clone(),
            observables: vec![Observable::from_samples("u", &self.values, &self.weights)],
        }
    }
}

/// Runs the chosen Galerkin solver and returns samples at the statistics nodes.
pub fn solve_scalar(
    problem: &ScalarProblem,
    cfg: &ScalarConfig,
    method: ScalarMethod,
) -> Result<ScalarOutcome> {
    match method {
        ScalarMethod::Direct => solve_direct(problem, cfg),
        ScalarMethod::N1 => solve_n1(problem, cfg)?.reconstruct(),
        ScalarMethod::N2 => solve_n2(problem, cfg)?.reconstruct(),
    }
}

/// Stochastic collocation on `nc` Gauss nodes: one deterministic run of the
/// inner method per node.
pub fn solve_collocation(
    problem: &ScalarProblem,
    cfg: &ScalarConfig,
    inner: ScalarMethod,
    nc: usize,
) -> Result<ScalarOutcome> {
    let rule = QuadratureRule::gauss(problem.family, nc)?;
    let runs: Vec<Vec<Complex64>> = rule
        .nodes()
        .par_iter()
        .map(|&z| -> Result<Vec<Complex64>> {
            let setup = ScalarSetup::point(problem, cfg, z)?;
            let out = match inner {
                ScalarMethod::Direct => {
                    let u = direct::run_direct(problem, &setup, cfg)?;
                    u.data().to_vec()
                }
                ScalarMethod::N1 => ngo::run_n1(problem, setup, cfg)?.reconstruct()?.values,
                ScalarMethod::N2 => ngo::run_n2(problem, setup, cfg)?.reconstruct()?.values,
            };
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let nx = cfg.nx;
    let mut values = vec![Complex64::new(0.0, 0.0); nx * nc];
    for (l, run) in runs.iter().enumerate() {
        for j in 0..nx {
            values[j * nc + l] = run[j];
        }
    }
    Ok(ScalarOutcome {
        x: problem.grid(nx)?.nodes(),
        nodes: rule.nodes().to_vec(),
        weights: rule.weights().to_vec(),
        values,
        coefficients: None,
    })
}

/// Lagrange interpolation of collocation samples at an arbitrary `z`.
pub fn collocation_interpolate(outcome: &ScalarOutcome, j: usize, z: f64) -> Complex64 {
    let nodes = &outcome.nodes;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, &zi) in nodes.iter().enumerate() {
        let mut li = 1.0;
        for (m, &zm) in nodes.iter().enumerate() {
            if m != i {
                li *= (z - zm) / (zi - zm);
            }
        }
        acc += outcome.value(j, i) * li;
    }
    acc
}
