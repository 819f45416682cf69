use num_complex::Complex64;

use super::problem::HoppingProblem;
use crate::chaos::GalerkinSpace;
use crate::error::Result;
use crate::scalar::time_steps;
use crate::spectral::{fourier_derivative, rk4_step, PeriodicGrid, Tensor};

/// gPC coefficients of the phase `S(t, x, p, z)` and of `dS/dp` at every
/// time step.
#[derive(Debug, Clone)]
pub struct HoppingPhase {
    pub nx: usize,
    pub np: usize,
    pub k: usize,
    pub times: Vec<f64>,
    /// `s[n][(j * np + k) * K + m]`
    pub s: Vec<Vec<f64>>,
    /// Same layout as `s`, for `dS/dp`.
    pub sp: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl HoppingPhase {
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `S(t_n)` at phase-space site `site = j * np + k` evaluated with basis values `psi`.
    pub fn s_at(&self, n: usize, site: usize, psi: &[f64]) -> f64 {
        dot(&self.s[n][site * self.k..(site + 1) * self.k], psi)
    }

    pub fn sp_at(&self, n: usize, site: usize, psi: &[f64]) -> f64 {
        dot(&self.sp[n][site * self.k..(site + 1) * self.k], psi)
    }

    pub fn s_modes(&self, n: usize, site: usize) -> &[f64] {
        &self.s[n][site * self.k..(site + 1) * self.k]
    }

    pub fn sp_modes(&self, n: usize, site: usize) -> &[f64] {
        &self.sp[n][site * self.k..(site + 1) * self.k]
    }

    pub fn last(&self) -> &[f64] {
        self.s.last().expect("phase history is never empty")
    }
}

/// Integrates `S_t + p S_x = 2E` (`U = 0`) together with its momentum
/// derivative `P = S_p`, which obeys `P_t + p P_x = -S_x`, by classical RK4
/// and spectral derivatives in `x`. Nothing is differentiated in `p`.
pub fn solve_phase_hopping(
    problem: &HoppingProblem,
    space: &GalerkinSpace,
    xg: &PeriodicGrid,
    pg: &PeriodicGrid,
    dt: f64,
    t_final: f64,
) -> Result<HoppingPhase> {
    let (nx, np, k) = (xg.len(), pg.len(), space.size());
    let mut forcing = Vec::with_capacity(nx * k);
    for x in xg.nodes() {
        let r = space.project(|z| (problem.gap)(x, z))?;
        forcing.extend(r.into_iter().map(|v| 2.0 * v));
    }
    let p = pg.nodes();
    let half = nx * np * k;
    let rhs = |y: &[f64], out: &mut [f64]| {
        // layout [nx, 2 * np, K]: S in the first np rows, P in the rest
        let mut t = Tensor::zeros(&[nx, 2 * np, k]);
        for j in 0..nx {
            for c in 0..2 {
                for kk in 0..np {
                    let src = c * half + (j * np + kk) * k;
                    let dst = t.offset(&[j, c * np + kk, 0]);
                    for m in 0..k {
                        t.data_mut()[dst + m] = Complex64::new(y[src + m], 0.0);
                    }
                }
            }
        }
        let d = fourier_derivative(&t, 0, xg);
        for j in 0..nx {
            for kk in 0..np {
                let site = (j * np + kk) * k;
                let ds = d.offset(&[j, kk, 0]);
                let dp = d.offset(&[j, np + kk, 0]);
                for m in 0..k {
                    let sx = d.data()[ds + m].re;
                    let px = d.data()[dp + m].re;
                    out[site + m] = forcing[j * k + m] - p[kk] * sx;
                    out[half + site + m] = -p[kk] * px - sx;
                }
            }
        }
    };

    let (steps, h) = time_steps(t_final, dt);
    let mut state = vec![0.0; 2 * half];
    let mut times = vec![0.0];
    let mut s = vec![state[..half].to_vec()];
    let mut sp = vec![state[half..].to_vec()];
    for n in 0..steps {
        rk4_step(&mut state, h, rhs);
        times.push((n + 1) as f64 * h);
        s.push(state[..half].to_vec());
        sp.push(state[half..].to_vec());
    }
    Ok(HoppingPhase {
        nx,
        np,
        k,
        times,
        s,
        sp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{ChaosBasis, Family};
    use std::sync::Arc;

    fn space(k: usize) -> GalerkinSpace {
        GalerkinSpace::with_default_rule(ChaosBasis::with_size(Family::Legendre, k).unwrap(), 0)
            .unwrap()
    }

    #[test]
    fn constant_gap_gives_linear_phase() {
        let mut prob = HoppingProblem::example41(0.1);
        prob.gap = Arc::new(|_, _| 0.7);
        prob.gap_dx = Arc::new(|_, _| 0.0);
        let sp = space(3);
        let (xg, pg) = (prob.x_grid(16).unwrap(), prob.p_grid(8).unwrap());
        let ph = solve_phase_hopping(&prob, &sp, &xg, &pg, 0.01, 0.2).unwrap();
        for site in 0..16 * 8 {
            for l in 0..sp.node_count() {
                assert!((ph.s_at(ph.steps(), site, sp.psi(l)) - 1.4 * 0.2).abs() < 1e-13);
                assert!(ph.sp_at(ph.steps(), site, sp.psi(l)).abs() < 1e-13);
            }
        }
    }

    /// `S = 2 int_0^t E(x - p (t - mu)) dmu`, `S_p = -2 int_0^t E_x(x - p(t - mu)) (t - mu) dmu`
    /// by composite Gauss-Legendre quadrature along the characteristic.
    fn characteristic(prob: &HoppingProblem, t: f64, x: f64, p: f64, z: f64) -> (f64, f64) {
        let rule = crate::chaos::QuadratureRule::gauss(Family::Legendre, 20).unwrap();
        let (mut s, mut sp) = (0.0, 0.0);
        for (&u, &w) in rule.nodes().iter().zip(rule.weights()) {
            // density 1/2 on [-1, 1] -> integral over [0, t] is t * sum w f
            let mu = 0.5 * t * (u + 1.0);
            let y = x - p * (t - mu);
            s += 2.0 * t * w * (prob.gap)(y, z);
            sp -= 2.0 * t * w * (prob.gap_dx)(y, z) * (t - mu);
        }
        (s, sp)
    }

    #[test]
    fn matches_characteristics() {
        let prob = HoppingProblem::example41(5e-3);
        let sp = space(4);
        let (xg, pg) = (prob.x_grid(32).unwrap(), prob.p_grid(16).unwrap());
        let t = 0.5;
        let ph = solve_phase_hopping(&prob, &sp, &xg, &pg, 1e-3, t).unwrap();
        let mut worst: f64 = 0.0;
        for j in (0..32).step_by(3) {
            for kk in 0..16 {
                for l in 0..sp.node_count() {
                    let (s, d) = characteristic(&prob, t, xg.node(j), pg.node(kk), sp.nodes()[l]);
                    let site = j * 16 + kk;
                    worst = worst.max((ph.s_at(ph.steps(), site, sp.psi(l)) - s).abs());
                    worst = worst.max((ph.sp_at(ph.steps(), site, sp.psi(l)) - d).abs());
                }
            }
        }
        assert!(worst < 1e-7, "worst deviation {worst:e}");
    }

    #[test]
    fn phase_increases_at_every_node() {
        let prob = HoppingProblem::example41(5e-3);
        let sp = space(4);
        let (xg, pg) = (prob.x_grid(16).unwrap(), prob.p_grid(16).unwrap());
        let ph = solve_phase_hopping(&prob, &sp, &xg, &pg, 0.01, 0.5).unwrap();
        for n in 0..ph.steps() {
            for site in 0..256 {
                for l in 0..sp.node_count() {
                    assert!(ph.s_at(n + 1, site, sp.psi(l)) > ph.s_at(n, site, sp.psi(l)));
                }
            }
        }
    }
}
