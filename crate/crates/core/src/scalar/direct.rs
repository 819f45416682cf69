use num_complex::Complex64;
use rayon::prelude::*;

use super::problem::{ScalarConfig, ScalarProblem, ScalarSetup, Splitting, TransportScheme};
use super::ScalarOutcome;
use crate::chaos::{GalerkinSpace, SymEigen};
use crate::error::Result;
use crate::spectral::{rk3_transport_step, upwind_transport_step, PeriodicGrid, Tensor};

/// Runs the direct Galerkin solver and evaluates the result at the
/// reconstruction nodes.
pub fn solve_direct(problem: &ScalarProblem, cfg: &ScalarConfig) -> Result<ScalarOutcome> {
    let setup = ScalarSetup::new(problem, cfg)?;
    let u = run_direct(problem, &setup, cfg)?;
    Ok(ScalarOutcome::from_coefficients(
        &setup.grid,
        &setup.recon,
        &u,
    ))
}

/// gPC coefficients `[nx, K]` at the final time.
pub(crate) fn run_direct(
    problem: &ScalarProblem,
    setup: &ScalarSetup,
    cfg: &ScalarConfig,
) -> Result<Tensor> {
    let (nx, k) = (setup.nx(), setup.k());
    let space = &setup.space;
    let mut u = Tensor::zeros(&[nx, k]);
    for j in 0..nx {
        let x = setup.grid.node(j);
        let c = space.project_complex(|z| (problem.initial)(x, z))?;
        u.data_mut()[j * k..(j + 1) * k].copy_from_slice(&c);
    }
    let eig: Vec<SymEigen> = (0..nx)
        .map(|j| space.matrix_from_nodal(setup.a_at(j))?.eigen())
        .collect::<Result<_>>()?;

    let (steps, h) = cfg.steps();
    let eps = problem.eps;
    for _ in 0..steps {
        match cfg.splitting {
            Splitting::Lie => {
                oscillate(&mut u, &eig, h / eps);
                nonlinear_euler(problem, space, &mut u, h)?;
                transport(&mut u, &setup.grid, &setup.speed, h, cfg.transport);
            }
            Splitting::Strang => {
                oscillate(&mut u, &eig, 0.5 * h / eps);
                nonlinear_midpoint(problem, space, &mut u, 0.5 * h)?;
                transport(&mut u, &setup.grid, &setup.speed, h, cfg.transport);
                nonlinear_midpoint(problem, space, &mut u, 0.5 * h)?;
                oscillate(&mut u, &eig, 0.5 * h / eps);
            }
        }
    }
    Ok(u)
}

/// `u <- exp(i A theta) u` per grid point.
fn oscillate(u: &mut Tensor, eig: &[SymEigen], theta: f64) {
    let k = u.modes();
    u.data_mut().par_chunks_mut(k).zip(eig).for_each(|(v, e)| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); k];
        e.apply_function(
            |lam| Complex64::from_polar(1.0, lam * theta),
            v,
            &mut scratch,
        );
    });
}

fn galerkin_source(problem: &ScalarProblem, space: &GalerkinSpace, u: &Tensor) -> Result<Tensor> {
    let k = u.modes();
    let mut out = Tensor::zeros(u.dims());
    let r = |w: Complex64| problem.nonlinearity.eval(w);
    out.data_mut()
        .par_chunks_mut(k)
        .zip(u.data().par_chunks(k))
        .try_for_each(|(o, c)| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); space.node_count()];
            space.nonlinear_into(&r, c, None, &mut scratch, o)
        })?;
    Ok(out)
}

fn nonlinear_euler(
    problem: &ScalarProblem,
    space: &GalerkinSpace,
    u: &mut Tensor,
    h: f64,
) -> Result<()> {
    if problem.nonlinearity.is_zero() {
        return Ok(());
    }
    let g = galerkin_source(problem, space, u)?;
    u.axpy(-h, &g);
    Ok(())
}

fn nonlinear_midpoint(
    problem: &ScalarProblem,
    space: &GalerkinSpace,
    u: &mut Tensor,
    h: f64,
) -> Result<()> {
    if problem.nonlinearity.is_zero() {
        return Ok(());
    }
    let g = galerkin_source(problem, space, u)?;
    let mut mid = u.clone();
    mid.axpy(-0.5 * h, &g);
    let g = galerkin_source(problem, space, &mid)?;
    u.axpy(-h, &g);
    Ok(())
}

/// Scalar-speed transport of a `[nx, ..., K]` tensor along its first axis.
pub(crate) fn transport(
    u: &mut Tensor,
    grid: &PeriodicGrid,
    speed: &[f64],
    h: f64,
    scheme: TransportScheme,
) {
    let per_x = u.len() / u.modes() / grid.len();
    match scheme {
        TransportScheme::Spectral => {
            let f = |d: &Tensor, out: &mut Tensor| {
                let k = d.modes();
                out.data_mut()
                    .par_chunks_mut(k)
                    .zip(d.data().par_chunks(k))
                    .enumerate()
                    .for_each(|(v, (o, dv))| {
                        let c = speed[v / per_x];
                        for (a, b) in o.iter_mut().zip(dv) {
                            *a = b * c;
                        }
                    });
            };
            rk3_transport_step(u, 0, grid, h, &f);
        }
        TransportScheme::Upwind => upwind_transport_step(u, 0, grid, h, |v| speed[v / per_x]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::problem::Nonlinearity;
    use std::sync::Arc;

    #[test]
    fn pure_transport_shifts_initial_data() {
        let mut p = ScalarProblem::example21(0.1);
        p.oscillation = Arc::new(|_, _| 0.0);
        p.nonlinearity = Nonlinearity::Zero;
        p.speed = Arc::new(|_| 1.0);
        let cfg = ScalarConfig {
            nx: 32,
            k: 2,
            dt: 1e-3,
            t_final: 0.2,
            ns: 2,
            ..Default::default()
        };
        let out = solve_direct(&p, &cfg).unwrap();
        for j in 0..32 {
            let want = (p.initial)(out.x[j] - 0.2, 0.0);
            assert!((out.values[j * 2] - want).norm() < 1e-6);
        }
    }

    #[test]
    fn oscillatory_step_is_an_isometry() {
        let p = ScalarProblem::example21(0.01);
        let cfg = ScalarConfig {
            nx: 4,
            k: 5,
            ..Default::default()
        };
        let s = ScalarSetup::new(&p, &cfg).unwrap();
        let eig: Vec<SymEigen> = (0..4)
            .map(|j| {
                s.space
                    .matrix_from_nodal(s.a_at(j))
                    .unwrap()
                    .eigen()
                    .unwrap()
            })
            .collect();
        let mut u = Tensor::from_fn(&[4, 5], |i| {
            Complex64::new(i[1] as f64 - 1.5, 0.3 * i[0] as f64)
        });
        let before: Vec<f64> = u
            .data()
            .chunks(5)
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum())
            .collect();
        oscillate(&mut u, &eig, 37.0);
        for (j, c) in u.data().chunks(5).enumerate() {
            let after: f64 = c.iter().map(|v| v.norm_sqr()).sum();
            assert!((after.sqrt() - before[j].sqrt()).abs() < 1e-12);
        }
    }
}
