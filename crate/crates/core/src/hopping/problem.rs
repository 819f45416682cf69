use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::chaos::{ChaosBasis, Family, GalerkinSpace, QuadratureRule};
use crate::error::{Error, Result};
use crate::scalar::{ComplexFn2, RealFn2, Splitting};
use crate::spectral::PeriodicGrid;

/// Two-band surface hopping system with a random half gap `E(x, z)`,
/// real coupling `b(x, p)`, `U = 0` and `b^+ = b^- = 0`.
#[derive(Clone)]
pub struct HoppingProblem {
    /// Half band gap `E(x, z) > 0`.
    pub gap: RealFn2,
    /// `dE/dx (x, z)`.
    pub gap_dx: RealFn2,
    /// Interband coupling `b(x, p)`.
    pub coupling: RealFn2,
    pub f_plus: RealFn2,
    pub f_minus: RealFn2,
    pub f_inter: ComplexFn2,
    pub eps: f64,
    pub x_domain: (f64, f64),
    pub p_domain: (f64, f64),
    pub family: Family,
}

impl fmt::Debug for HoppingProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HoppingProblem")
            .field("eps", &self.eps)
            .field("x_domain", &self.x_domain)
            .field("p_domain", &self.p_domain)
            .field("family", &self.family)
            .finish_non_exhaustive()
    }
}

fn maxwellian(p: f64) -> f64 {
    (-0.5 * p * p).exp() / (2.0 * PI).sqrt()
}

impl HoppingProblem {
    /// Avoided crossing: `E = (1 - cos(x/2) + sqrt(eps)) (1 + z/2)`,
    /// `b = -sin(p + 1)/2`, on `[-2pi, 2pi]^2`.
    pub fn example41(eps: f64) -> Self {
        let shift = eps.max(0.0).sqrt();
        HoppingProblem {
            gap: Arc::new(move |x: f64, z: f64| (1.0 - (0.5 * x).cos() + shift) * (1.0 + 0.5 * z)),
            gap_dx: Arc::new(|x: f64, z: f64| 0.5 * (0.5 * x).sin() * (1.0 + 0.5 * z)),
            coupling: Arc::new(|_x: f64, p: f64| -0.5 * (p + 1.0).sin()),
            f_plus: Arc::new(|x: f64, p: f64| (1.0 + 0.5 * x.cos()) * maxwellian(p)),
            f_minus: Arc::new(|x: f64, p: f64| (1.0 + 0.5 * x.cos()) * maxwellian(p)),
            f_inter: Arc::new(|x: f64, p: f64| {
                Complex64::new(1.0 + 0.5 * x.sin(), 1.0 + 0.5 * x.cos()) * maxwellian(p)
            }),
            eps,
            x_domain: (-2.0 * PI, 2.0 * PI),
            p_domain: (-2.0 * PI, 2.0 * PI),
            family: Family::Legendre,
        }
    }

    /// [`Self::example41`] with an `O(1)` gap `E = (10 - cos(x/2)) (1 + z/2)`.
    pub fn example41_big_gap(eps: f64) -> Self {
        HoppingProblem {
            gap: Arc::new(|x: f64, z: f64| (10.0 - (0.5 * x).cos()) * (1.0 + 0.5 * z)),
            gap_dx: Arc::new(|x: f64, z: f64| 0.5 * (0.5 * x).sin() * (1.0 + 0.5 * z)),
            ..Self::example41(eps)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.x_domain.1 > self.x_domain.0) || !(self.p_domain.1 > self.p_domain.0) {
            return Err(Error::config("empty phase-space domain"));
        }
        Ok(())
    }

    pub fn x_grid(&self, nx: usize) -> Result<PeriodicGrid> {
        PeriodicGrid::new(nx, self.x_domain.0, self.x_domain.1)
    }

    pub fn p_grid(&self, np: usize) -> Result<PeriodicGrid> {
        PeriodicGrid::new(np, self.p_domain.0, self.p_domain.1)
    }
}

/// Time integrator for the interband source in the direct solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceScheme {
    /// Crank-Nicolson with substitution, using the Galerkin matrix of `E^2`.
    CrankNicolson,
    /// Exact rotation in the eigenbasis of the Galerkin matrix of `E`.
    Exact,
}

/// Integrator for the non-stiff source of the phase-time profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProfileSource {
    ForwardEuler,
    /// Explicit midpoint rule.
    Midpoint,
}

/// Numerical parameters shared by the hopping solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct HoppingConfig {
    pub nx: usize,
    pub np: usize,
    pub k: usize,
    /// Requested Galerkin quadrature size; raised to at least `2P + 2`.
    pub ng: usize,
    pub ntau: usize,
    pub dt: f64,
    /// Phase-variable step for N2; `None` selects `dt * mean(2E)`.
    pub ds: Option<f64>,
    pub t_final: f64,
    /// Quadrature size for reconstruction and statistics.
    pub ns: usize,
    pub splitting: Splitting,
    pub source: SourceScheme,
    pub profile_source: ProfileSource,
    /// Geometric-optics solvers only: densities are summed over a momentum
    /// grid refined by this factor, evaluating the reconstruction between
    /// nodes. `1` sums over the computational grid.
    pub density_refine: usize,
}

impl Default for HoppingConfig {
    fn default() -> Self {
        HoppingConfig {
            nx: 32,
            np: 32,
            k: 4,
            ng: 0,
            ntau: 8,
            dt: 1e-3,
            ds: None,
            t_final: 0.5,
            ns: 16,
            splitting: Splitting::Lie,
            source: SourceScheme::CrankNicolson,
            profile_source: ProfileSource::ForwardEuler,
            density_refine: 1,
        }
    }
}

impl HoppingConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("nx", self.nx),
            ("np", self.np),
            ("k", self.k),
            ("ntau", self.ntau),
            ("ns", self.ns),
            ("density_refine", self.density_refine),
        ] {
            if v == 0 {
                bad.push(format!("{name} must be positive"));
            }
        }
        if !(self.dt > 0.0) {
            bad.push("dt must be positive".to_string());
        }
        if !(self.t_final >= 0.0) {
            bad.push("t_final must be non-negative".to_string());
        }
        if let Some(ds) = self.ds {
            if !(ds > 0.0) {
                bad.push("ds must be positive".to_string());
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::config(bad.join("; ")))
        }
    }

    pub fn steps(&self) -> (usize, f64) {
        crate::scalar::time_steps(self.t_final, self.dt)
    }
}

/// Grids, Galerkin spaces and sampled coefficients shared by the solvers.
pub(crate) struct HoppingSetup {
    pub xg: PeriodicGrid,
    pub pg: PeriodicGrid,
    pub space: GalerkinSpace,
    pub recon: GalerkinSpace,
    /// `E(x_j, z_q)`, `[j * ng + q]`.
    pub gap: Vec<f64>,
    /// `dE/dx (x_j, z_q)`.
    pub gap_dx: Vec<f64>,
    /// `b(x_j, p_k)`, `[j * np + k]`.
    pub coupling: Vec<f64>,
}

impl HoppingSetup {
    pub fn new(problem: &HoppingProblem, cfg: &HoppingConfig) -> Result<Self> {
        problem.validate()?;
        cfg.validate()?;
        let basis = ChaosBasis::with_size(problem.family, cfg.k)?;
        let space = GalerkinSpace::with_default_rule(basis.clone(), cfg.ng)?;
        let recon = GalerkinSpace::new(basis, QuadratureRule::gauss(problem.family, cfg.ns)?);
        Self::assemble(problem, cfg, space, recon)
    }

    pub fn point(problem: &HoppingProblem, cfg: &HoppingConfig, z: f64) -> Result<Self> {
        problem.validate()?;
        cfg.validate()?;
        let space = GalerkinSpace::point(problem.family, z);
        Self::assemble(problem, cfg, space.clone(), space)
    }

    fn assemble(
        problem: &HoppingProblem,
        cfg: &HoppingConfig,
        space: GalerkinSpace,
        recon: GalerkinSpace,
    ) -> Result<Self> {
        let xg = problem.x_grid(cfg.nx)?;
        let pg = problem.p_grid(cfg.np)?;
        let mut gap = Vec::new();
        let mut gap_dx = Vec::new();
        for (j, x) in xg.nodes().into_iter().enumerate() {
            for (q, &z) in space.nodes().iter().enumerate() {
                let e = (problem.gap)(x, z);
                if !(e > 0.0) || !e.is_finite() {
                    return Err(Error::singular(
                        "band gap E",
                        format!("x index {j}, node {q}: E = {e}"),
                    ));
                }
                gap.push(e);
                gap_dx.push((problem.gap_dx)(x, z));
            }
        }
        let mut coupling = Vec::with_capacity(cfg.nx * cfg.np);
        for x in xg.nodes() {
            for p in pg.nodes() {
                coupling.push((problem.coupling)(x, p));
            }
        }
        Ok(HoppingSetup {
            xg,
            pg,
            space,
            recon,
            gap,
            gap_dx,
            coupling,
        })
    }

    pub fn nx(&self) -> usize {
        self.xg.len()
    }

    pub fn np(&self) -> usize {
        self.pg.len()
    }

    pub fn k(&self) -> usize {
        self.space.size()
    }

    pub fn ng(&self) -> usize {
        self.space.node_count()
    }

    pub fn gap_at(&self, j: usize) -> &[f64] {
        &self.gap[j * self.ng()..(j + 1) * self.ng()]
    }

    pub fn gap_dx_at(&self, j: usize) -> &[f64] {
        &self.gap_dx[j * self.ng()..(j + 1) * self.ng()]
    }
}
