use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::chaos::{checked_recip, ChaosBasis, Family, GalerkinSpace, QuadratureRule};
use crate::error::{Error, Result};
use crate::spectral::PeriodicGrid;

pub type RealFn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type RealFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type ComplexFn2 = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;

/// The source term `r(u)`.
#[derive(Clone)]
pub enum Nonlinearity {
    Zero,
    Identity,
    /// `u^2 / (u^2 + 2|u|^2)`; undefined at `u = 0`.
    RationalSquare,
    Custom(Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>),
}

impl Nonlinearity {
    pub fn eval(&self, u: Complex64) -> Complex64 {
        match self {
            Nonlinearity::Zero => Complex64::new(0.0, 0.0),
            Nonlinearity::Identity => u,
            Nonlinearity::RationalSquare => {
                let u2 = u * u;
                u2 / (u2 + 2.0 * u.norm_sqr())
            }
            Nonlinearity::Custom(f) => f(u),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Nonlinearity::Zero)
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nonlinearity::Zero => write!(f, "Zero"),
            Nonlinearity::Identity => write!(f, "Identity"),
            Nonlinearity::RationalSquare => write!(f, "RationalSquare"),
            Nonlinearity::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// `u_t + c(x) u_x + r(u) = i a(x, z) u / eps` on a periodic interval.
#[derive(Clone)]
pub struct ScalarProblem {
    pub speed: RealFn1,
    pub oscillation: RealFn2,
    pub nonlinearity: Nonlinearity,
    pub initial: ComplexFn2,
    pub eps: f64,
    pub domain: (f64, f64),
    pub family: Family,
}

impl fmt::Debug for ScalarProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarProblem")
            .field("nonlinearity", &self.nonlinearity)
            .field("eps", &self.eps)
            .field("domain", &self.domain)
            .field("family", &self.family)
            .finish_non_exhaustive()
    }
}

fn example_initial(x: f64) -> Complex64 {
    Complex64::new(1.0 + 0.5 * (2.0 * x).cos(), 1.0 + 0.5 * (2.0 * x).sin())
}

impl ScalarProblem {
    /// Rational nonlinearity, `c = cos^2 x`, `a = (3/2 + cos 2x)(1 + z/2)`
    /// with uniform `z`, on `[-pi/2, pi/2]`.
    pub fn example21(eps: f64) -> Self {
        ScalarProblem {
            speed: Arc::new(|x: f64| x.cos().powi(2)),
            oscillation: Arc::new(|x: f64, z: f64| (1.5 + (2.0 * x).cos()) * (1.0 + 0.5 * z)),
            nonlinearity: Nonlinearity::RationalSquare,
            initial: Arc::new(|x: f64, _z: f64| example_initial(x)),
            eps,
            domain: (-PI / 2.0, PI / 2.0),
            family: Family::Legendre,
        }
    }

    /// Linear case with an analytic solution: `r = 0`, `c = 1`,
    /// `a = 1 + z/2`, same initial data and domain as [`Self::example21`].
    pub fn linear(eps: f64) -> Self {
        ScalarProblem {
            speed: Arc::new(|_| 1.0),
            oscillation: Arc::new(|_, z: f64| 1.0 + 0.5 * z),
            nonlinearity: Nonlinearity::Zero,
            ..Self::example21(eps)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.domain.1 > self.domain.0) {
            return Err(Error::config("empty spatial domain"));
        }
        Ok(())
    }

    pub fn grid(&self, nx: usize) -> Result<PeriodicGrid> {
        PeriodicGrid::new(nx, self.domain.0, self.domain.1)
    }

    /// Analytic solution when `r = 0` and `c`, `a` are independent of `x`:
    /// `exp(i a(z) t / eps) u_in(x - c t, z)`, with `x - ct` wrapped into the domain.
    pub fn linear_exact(&self, t: f64, x: f64, z: f64) -> Complex64 {
        let c = (self.speed)(0.0);
        let a = (self.oscillation)(0.0, z);
        let (lo, hi) = self.domain;
        let xs = lo + (x - c * t - lo).rem_euclid(hi - lo);
        Complex64::from_polar(1.0, a * t / self.eps) * (self.initial)(xs, z)
    }
}

/// Numerical parameters shared by the scalar solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarConfig {
    pub nx: usize,
    /// Number of gPC modes `K`.
    pub k: usize,
    /// Requested Galerkin quadrature size; raised to at least `2P + 2`.
    pub ng: usize,
    pub ntau: usize,
    pub dt: f64,
    /// Step in the phase variable for N2; `None` selects `dt * mean(a)`.
    pub ds: Option<f64>,
    pub t_final: f64,
    /// Quadrature size for reconstruction and statistics.
    pub ns: usize,
    pub transport: TransportScheme,
    pub splitting: Splitting,
}

impl Default for ScalarConfig {
    fn default() -> Self {
        ScalarConfig {
            nx: 32,
            k: 4,
            ng: 0,
            ntau: 8,
            dt: 1e-3,
            ds: None,
            t_final: 0.1,
            ns: 16,
            transport: TransportScheme::Spectral,
            splitting: Splitting::Lie,
        }
    }
}

impl ScalarConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("nx", self.nx),
            ("k", self.k),
            ("ntau", self.ntau),
            ("ns", self.ns),
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

    /// Number of steps and the step that divides `t_final` evenly.
    pub fn steps(&self) -> (usize, f64) {
        time_steps(self.t_final, self.dt)
    }
}

pub(crate) fn time_steps(t_final: f64, dt: f64) -> (usize, f64) {
    if t_final == 0.0 {
        return (0, dt);
    }
    let n = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    (n, t_final / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransportScheme {
    /// Pseudo-spectral derivative with the three-stage Runge-Kutta scheme.
    Spectral,
    /// First-order upwind differences with forward Euler (scalar speeds only).
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Splitting {
    /// oscillatory, nonlinear, transport; first order.
    Lie,
    /// Symmetric composition with half steps around the transport step.
    Strang,
}

/// The Galerkin space, the reconstruction rule and the sampled coefficient
/// fields every scalar solver needs.
pub(crate) struct ScalarSetup {
    pub grid: PeriodicGrid,
    pub space: GalerkinSpace,
    pub recon: GalerkinSpace,
    pub speed: Vec<f64>,
    /// `a(x_j, z_l)` at Galerkin nodes, `[j * ng + l]`.
    pub a_nodal: Vec<f64>,
}

impl ScalarSetup {
    pub fn new(problem: &ScalarProblem, cfg: &ScalarConfig) -> Result<Self> {
        problem.validate()?;
        cfg.validate()?;
        let grid = problem.grid(cfg.nx)?;
        let basis = ChaosBasis::with_size(problem.family, cfg.k)?;
        let space = GalerkinSpace::with_default_rule(basis.clone(), cfg.ng)?;
        let recon = GalerkinSpace::new(basis, QuadratureRule::gauss(problem.family, cfg.ns)?);
        Ok(Self::assemble(problem, grid, space, recon))
    }

    /// Deterministic setup at one sample `z`.
    pub fn point(problem: &ScalarProblem, cfg: &ScalarConfig, z: f64) -> Result<Self> {
        problem.validate()?;
        cfg.validate()?;
        let grid = problem.grid(cfg.nx)?;
        let space = GalerkinSpace::point(problem.family, z);
        Ok(Self::assemble(problem, grid, space.clone(), space))
    }

    fn assemble(
        problem: &ScalarProblem,
        grid: PeriodicGrid,
        space: GalerkinSpace,
        recon: GalerkinSpace,
    ) -> Self {
        let speed = grid.nodes().iter().map(|&x| (problem.speed)(x)).collect();
        let mut a_nodal = Vec::with_capacity(grid.len() * space.node_count());
        for x in grid.nodes() {
            for &z in space.nodes() {
                a_nodal.push((problem.oscillation)(x, z));
            }
        }
        ScalarSetup {
            grid,
            space,
            recon,
            speed,
            a_nodal,
        }
    }

    pub fn nx(&self) -> usize {
        self.grid.len()
    }

    pub fn k(&self) -> usize {
        self.space.size()
    }

    pub fn a_at(&self, j: usize) -> &[f64] {
        let ng = self.space.node_count();
        &self.a_nodal[j * ng..(j + 1) * ng]
    }

    /// `1/a` at the Galerkin nodes of grid point `j`.
    pub fn inv_a_at(&self, j: usize) -> Result<Vec<f64>> {
        let x = self.grid.node(j);
        self.a_at(j)
            .iter()
            .enumerate()
            .map(|(l, &a)| checked_recip(a, "1/a", || format!("x = {x}, node {l}")))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_square_values() {
        let r = Nonlinearity::RationalSquare;
        // real u: u^2/(3u^2) = 1/3
        assert!((r.eval(Complex64::new(2.0, 0.0)) - Complex64::new(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(!r.eval(Complex64::new(0.0, 0.0)).is_finite());
    }

    #[test]
    fn config_validation() {
        let mut c = ScalarConfig::default();
        assert!(c.validate().is_ok());
        c.k = 0;
        c.dt = -1.0;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("k must") && msg.contains("dt must"));
        assert!(ScalarProblem::example21(0.0).validate().is_err());
    }

    #[test]
    fn steps_divide_interval() {
        assert_eq!(time_steps(0.25, 0.01).0, 25);
        let (n, dt) = time_steps(0.1, 0.03);
        assert_eq!(n, 4);
        assert!((dt - 0.025).abs() < 1e-15);
    }

    #[test]
    fn exact_linear_solution_wraps() {
        let p = ScalarProblem::linear(0.1);
        let u = p.linear_exact(PI, 0.3, 0.2);
        let want = Complex64::from_polar(1.0, 1.1 * PI / 0.1) * (p.initial)(0.3, 0.2);
        assert!((u - want).norm() < 1e-12);
    }
}
