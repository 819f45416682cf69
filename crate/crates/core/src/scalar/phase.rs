use num_complex::Complex64;

use super::problem::{time_steps, ScalarProblem};
use crate::chaos::GalerkinSpace;
use crate::error::Result;
use crate::spectral::{fourier_derivative, rk4_step, PeriodicGrid, Tensor};

/// gPC coefficients of the phase `S(t, x, z)` on the spatial grid.
#[derive(Debug, Clone)]
pub struct ScalarPhase {
    pub grid: PeriodicGrid,
    pub k: usize,
    pub times: Vec<f64>,
    /// `history[n][j * K + k]` at `times[n]`.
    pub history: Vec<Vec<f64>>,
}

impl ScalarPhase {
    /// Coefficients at the final time.
    pub fn last(&self) -> &[f64] {
        self.history.last().expect("phase history is never empty")
    }

    /// Final phase at grid point `j`, evaluated with basis values `psi`.
    pub fn final_at(&self, j: usize, psi: &[f64]) -> f64 {
        let s = &self.last()[j * self.k..(j + 1) * self.k];
        s.iter().zip(psi).map(|(a, b)| a * b).sum()
    }
}

/// Integrates `S_t + c S_x = R(x)` with `S(0) = 0`, `R` the projection of `a`,
/// by classical RK4 and spectral differentiation.
pub fn solve_phase_scalar(
    problem: &ScalarProblem,
    space: &GalerkinSpace,
    grid: &PeriodicGrid,
    dt: f64,
    t_final: f64,
) -> Result<ScalarPhase> {
    let k = space.size();
    let nx = grid.len();
    let mut forcing = Vec::with_capacity(nx * k);
    for x in grid.nodes() {
        forcing.extend(space.project(|z| (problem.oscillation)(x, z))?);
    }
    let speed: Vec<f64> = grid.nodes().iter().map(|&x| (problem.speed)(x)).collect();
    let transported = speed.iter().any(|c| *c != 0.0);

    let (steps, h) = time_steps(t_final, dt);
    let mut state = vec![0.0; nx * k];
    let mut history = vec![state.clone()];
    let mut times = vec![0.0];
    let rhs = |s: &[f64], out: &mut [f64]| {
        out.copy_from_slice(&forcing);
        if transported {
            let t = Tensor::from_vec(
                &[nx, k],
                s.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            )
            .expect("phase shape");
            let d = fourier_derivative(&t, 0, grid);
            for (i, o) in out.iter_mut().enumerate() {
                *o -= speed[i / k] * d.data()[i].re;
            }
        }
    };
    for n in 0..steps {
        rk4_step(&mut state, h, rhs);
        history.push(state.clone());
        times.push((n + 1) as f64 * h);
    }
    Ok(ScalarPhase {
        grid: grid.clone(),
        k,
        times,
        history,
    })
}
