use num_complex::Complex64;

use super::problem::ScalarProblem;
use crate::chaos::{checked_recip, GalerkinSpace};
use crate::error::{Error, Result};
use crate::spectral::{fft_lines, Direction, PeriodicGrid, Tensor};

/// Mean-free antiderivative of the mean-free part of a function sampled on
/// the uniform `[0, 2pi)` grid: Fourier mode `m != 0` is divided by `i m`,
/// the mean and the unpaired Nyquist mode are dropped.
pub fn chapman_enskog_profile(samples: &[Complex64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf = samples.to_vec();
    fft_lines(&mut buf, n, Direction::Forward);
    buf[0] = Complex64::new(0.0, 0.0);
    for (m, c) in buf.iter_mut().enumerate().skip(1) {
        if n % 2 == 0 && m == n / 2 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let wave = if m <= n / 2 {
            m as f64
        } else {
            m as f64 - n as f64
        };
        *c /= Complex64::new(0.0, wave);
    }
    fft_lines(&mut buf, n, Direction::Inverse);
    buf
}

/// Profile correction `u + (eps/a) [G(0) - G(tau)]` for one sample, where
/// `G = L^{-1}(I - Pi)[e^{-i tau} r(e^{i tau} u)]`.
pub(crate) fn prepared_samples(
    problem: &ScalarProblem,
    tau: &PeriodicGrid,
    u0: Complex64,
    inv_a: f64,
    out: &mut [Complex64],
) -> Result<()> {
    if problem.nonlinearity.is_zero() {
        out.iter_mut().for_each(|v| *v = u0);
        return Ok(());
    }
    let mut g = Vec::with_capacity(tau.len());
    for (i, t) in tau.nodes().into_iter().enumerate() {
        let rot = Complex64::from_polar(1.0, t);
        let r = problem.nonlinearity.eval(rot * u0);
        if !r.is_finite() {
            return Err(Error::NonlinearEvaluation {
                node: i,
                value: format!("{}", rot * u0),
            });
        }
        g.push(r * rot.conj());
    }
    let big_g = chapman_enskog_profile(&g);
    let scale = problem.eps * inv_a;
    for (o, gt) in out.iter_mut().zip(&big_g) {
        *o = u0 + (big_g[0] - gt) * scale;
    }
    Ok(())
}

/// gPC coefficients of the well-prepared profile, shape `[nx, ntau, K]`.
pub fn prepare_initial_v(
    problem: &ScalarProblem,
    space: &GalerkinSpace,
    x_grid: &PeriodicGrid,
    tau: &PeriodicGrid,
) -> Result<Tensor> {
    let (nx, nt, k, ng) = (x_grid.len(), tau.len(), space.size(), space.node_count());
    let mut v = Tensor::zeros(&[nx, nt, k]);
    let mut nodal = vec![Complex64::new(0.0, 0.0); ng * nt];
    let mut line = vec![Complex64::new(0.0, 0.0); nt];
    let mut column = vec![Complex64::new(0.0, 0.0); ng];
    let mut coeffs = vec![Complex64::new(0.0, 0.0); k];
    for j in 0..nx {
        let x = x_grid.node(j);
        for (l, &z) in space.nodes().iter().enumerate() {
            let a = (problem.oscillation)(x, z);
            let inv_a = checked_recip(a, "1/a", || format!("x = {x}, node {l}"))?;
            prepared_samples(problem, tau, (problem.initial)(x, z), inv_a, &mut line)?;
            for (i, val) in line.iter().enumerate() {
                nodal[i * ng + l] = *val;
            }
        }
        for i in 0..nt {
            column.copy_from_slice(&nodal[i * ng..(i + 1) * ng]);
            space.from_nodal(&column, &mut coeffs);
            let off = v.offset(&[j, i, 0]);
            v.data_mut()[off..off + k].copy_from_slice(&coeffs);
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{ChaosBasis, Family};
    use crate::scalar::problem::Nonlinearity;

    fn tau(n: usize) -> PeriodicGrid {
        PeriodicGrid::tau(n).unwrap()
    }

    #[test]
    fn antiderivative_examples() {
        let g = tau(16);
        let cos: Vec<Complex64> = g
            .nodes()
            .iter()
            .map(|t| Complex64::new(t.cos(), 0.0))
            .collect();
        let sin: Vec<Complex64> = g
            .nodes()
            .iter()
            .map(|t| Complex64::new(t.sin(), 0.0))
            .collect();
        let a = chapman_enskog_profile(&cos);
        let b = chapman_enskog_profile(&sin);
        for (i, t) in g.nodes().iter().enumerate() {
            assert!((a[i] - Complex64::new(t.sin(), 0.0)).norm() < 1e-12);
            assert!((b[i] + Complex64::new(t.cos(), 0.0)).norm() < 1e-12);
        }
        let c = chapman_enskog_profile(&[Complex64::new(2.0, 1.0); 8]);
        assert!(c.iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn linear_and_zero_sources_need_no_correction() {
        let sp = GalerkinSpace::with_default_rule(ChaosBasis::new(Family::Legendre, 2), 0).unwrap();
        for r in [Nonlinearity::Zero, Nonlinearity::Identity] {
            let mut p = ScalarProblem::example21(0.3);
            p.nonlinearity = r;
            let xg = p.grid(8).unwrap();
            let v = prepare_initial_v(&p, &sp, &xg, &tau(8)).unwrap();
            for j in 0..8 {
                let t = sp.project_complex(|z| (p.initial)(xg.node(j), z)).unwrap();
                for i in 0..8 {
                    for m in 0..3 {
                        assert!((v.get(&[j, i, m]) - t[m]).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn tau_zero_slice_is_initial_data() {
        let p = ScalarProblem::example21(0.5);
        let sp = GalerkinSpace::with_default_rule(ChaosBasis::new(Family::Legendre, 3), 0).unwrap();
        let xg = p.grid(8).unwrap();
        let v = prepare_initial_v(&p, &sp, &xg, &tau(16)).unwrap();
        for j in 0..8 {
            let t = sp.project_complex(|z| (p.initial)(xg.node(j), z)).unwrap();
            for m in 0..4 {
                assert!((v.get(&[j, 0, m]) - t[m]).norm() < 1e-13);
            }
        }
        // the correction is mean-free in tau and scales with eps
        let mean: Complex64 = (0..16).map(|i| v.get(&[3, i, 0])).sum::<Complex64>() / 16.0;
        let t = sp.project_complex(|z| (p.initial)(xg.node(3), z)).unwrap();
        let g0_shift = mean - t[0];
        assert!(g0_shift.norm() > 1e-4);
    }
}
