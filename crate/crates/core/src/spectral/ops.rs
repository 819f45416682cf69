use num_complex::Complex64;
use rayon::prelude::*;

use super::grid::PeriodicGrid;
use super::tensor::{Direction, Tensor};
use crate::chaos::SymEigen;
use crate::error::{Error, Result};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Transforms `u` along `axis`, hands every trailing-axis vector of the
/// spectrum to `f` together with its flat vector index and the odd-operator
/// wavenumber of its position, then transforms back.
pub fn spectral_map<F>(u: &mut Tensor, axis: usize, grid: &PeriodicGrid, f: F)
where
    F: Fn(usize, f64, &mut [Complex64]) + Sync,
{
    check_axis(u, axis, grid);
    let k = u.modes();
    let xi = grid.odd_wavenumbers();
    let st = u.stride(axis) / k;
    let n = grid.len();
    u.fft_axis(axis, Direction::Forward);
    u.data_mut()
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(v, vec)| {
            f(v, xi[(v / st) % n], vec);
        });
    u.fft_axis(axis, Direction::Inverse);
}

fn check_axis(u: &Tensor, axis: usize, grid: &PeriodicGrid) {
    assert!(
        axis + 1 < u.dims().len() || u.dims().len() == 1,
        "the trailing axis holds gPC modes and cannot be differentiated"
    );
    assert_eq!(
        u.dims()[axis],
        grid.len(),
        "grid does not match tensor axis"
    );
}

/// Spectral first derivative along `axis` (Nyquist mode dropped).
pub fn fourier_derivative(u: &Tensor, axis: usize, grid: &PeriodicGrid) -> Tensor {
    let mut out = u.clone();
    fourier_derivative_in_place(&mut out, axis, grid);
    out
}

pub fn fourier_derivative_in_place(u: &mut Tensor, axis: usize, grid: &PeriodicGrid) {
    spectral_map(u, axis, grid, |_, xi, v| {
        let s = I * xi;
        v.iter_mut().for_each(|c| *c *= s);
    });
}

/// Spectral second derivative along `axis` (keeps the Nyquist mode).
pub fn fourier_second_derivative(u: &Tensor, axis: usize, grid: &PeriodicGrid) -> Tensor {
    check_axis(u, axis, grid);
    let mut out = u.clone();
    let k = out.modes();
    let xi = grid.wavenumbers();
    let st = out.stride(axis) / k;
    let n = grid.len();
    out.fft_axis(axis, Direction::Forward);
    out.data_mut()
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(v, vec)| {
            let s = -xi[(v / st) % n].powi(2);
            vec.iter_mut().for_each(|c| *c *= s);
        });
    out.fft_axis(axis, Direction::Inverse);
    out
}

/// First-order one-sided difference along `axis`, upwinded by the sign of
/// `speed(v)` for trailing-axis vector `v`.
pub fn upwind_derivative(
    u: &Tensor,
    axis: usize,
    grid: &PeriodicGrid,
    speed: impl Fn(usize) -> f64 + Sync,
) -> Tensor {
    check_axis(u, axis, grid);
    let k = u.modes();
    let n = grid.len();
    let st = u.stride(axis);
    let h = grid.spacing();
    let src = u.data();
    let mut out = Tensor::zeros(u.dims());
    out.data_mut()
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(v, o)| {
            let base = v * k;
            let pos = (base / st) % n;
            let here = base;
            let (a, b) = if speed(v) >= 0.0 {
                let back = if pos == 0 {
                    here + (n - 1) * st
                } else {
                    here - st
                };
                (here, back)
            } else {
                let fwd = if pos + 1 == n {
                    here - (n - 1) * st
                } else {
                    here + st
                };
                (fwd, here)
            };
            for m in 0..k {
                o[m] = (src[a + m] - src[b + m]) / h;
            }
        });
    out
}

/// Applies a matrix field to the trailing axis: `out_v = s * M_i in_v`
/// where `(i, s) = site(v)` and `mats` stores row-major `K x K` blocks.
pub fn apply_site_matrices(
    input: &Tensor,
    out: &mut Tensor,
    mats: &[f64],
    site: impl Fn(usize) -> (usize, f64) + Sync,
) {
    let k = input.modes();
    let src = input.data();
    out.data_mut()
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(v, o)| {
            let (i, s) = site(v);
            let m = &mats[i * k * k..(i + 1) * k * k];
            let x = &src[v * k..(v + 1) * k];
            for r in 0..k {
                let row = &m[r * k..(r + 1) * k];
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..k {
                    acc += x[c] * row[c];
                }
                o[r] = acc * s;
            }
        });
}

/// One step of the three-stage scheme
/// `u1 = u + dt/2 T(u)`, `u2 = u + dt/2 T(u1)`, `u' = u + dt T(u2)`
/// with `T(u) = -speed(spectral d/daxis u)`.
///
/// `speed(d, out)` must write the speed applied to the derivative `d`.
pub fn rk3_transport_step(
    u: &mut Tensor,
    axis: usize,
    grid: &PeriodicGrid,
    dt: f64,
    speed: &(dyn Fn(&Tensor, &mut Tensor) + Sync),
) {
    let mut work = Tensor::zeros(u.dims());
    let tendency = |state: &Tensor, out: &mut Tensor| {
        let d = fourier_derivative(state, axis, grid);
        speed(&d, out);
    };
    let base = u.clone();
    tendency(&base, &mut work);
    let mut stage = base.clone();
    stage.axpy(-0.5 * dt, &work);
    tendency(&stage, &mut work);
    stage = base.clone();
    stage.axpy(-0.5 * dt, &work);
    tendency(&stage, &mut work);
    u.axpy(-dt, &work);
}

/// Forward-Euler step with first-order upwinding and a scalar speed per
/// trailing-axis vector.
pub fn upwind_transport_step(
    u: &mut Tensor,
    axis: usize,
    grid: &PeriodicGrid,
    dt: f64,
    speed: impl Fn(usize) -> f64 + Sync + Copy,
) {
    let d = upwind_derivative(u, axis, grid, speed);
    let k = u.modes();
    u.data_mut()
        .par_chunks_mut(k)
        .zip(d.data().par_chunks(k))
        .enumerate()
        .for_each(|(v, (x, dx))| {
            let c = speed(v);
            for (a, b) in x.iter_mut().zip(dx) {
                *a -= b * (c * dt);
            }
        });
}

/// Classical fourth-order Runge-Kutta step for `y' = rhs(y)`.
pub fn rk4_step<T>(y: &mut [T], dt: f64, mut rhs: impl FnMut(&[T], &mut [T]))
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = y.len();
    let mut k1 = vec![T::default(); n];
    let mut k2 = vec![T::default(); n];
    let mut k3 = vec![T::default(); n];
    let mut k4 = vec![T::default(); n];
    let mut tmp = vec![T::default(); n];
    rhs(y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + k1[i] * (0.5 * dt);
    }
    rhs(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + k2[i] * (0.5 * dt);
    }
    rhs(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + k3[i] * dt;
    }
    rhs(&tmp, &mut k4);
    for i in 0..n {
        y[i] = y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
    }
}

/// Generator of a linear, per-site operator along a transformed axis.
pub enum Generator<'a> {
    /// Scalar coefficient for trailing-axis vector `v`.
    Scalar(&'a (dyn Fn(usize) -> f64 + Sync)),
    /// Symmetric matrix per site: `site(v)` picks the decomposition and a
    /// scalar multiplier.
    Matrix {
        eig: &'a [SymEigen],
        site: &'a (dyn Fn(usize) -> (usize, f64) + Sync),
    },
}

/// Exact solution over `dt` of `f_t + G f_axis = 0`: every Fourier mode is
/// multiplied by `exp(-i xi G dt)`.
pub fn exact_advect_fourier(
    u: &mut Tensor,
    axis: usize,
    grid: &PeriodicGrid,
    generator: &Generator,
    dt: f64,
) {
    if dt == 0.0 {
        return;
    }
    match generator {
        Generator::Scalar(c) => spectral_map(u, axis, grid, |v, xi, vec| {
            let f = Complex64::from_polar(1.0, -xi * c(v) * dt);
            vec.iter_mut().for_each(|x| *x *= f);
        }),
        Generator::Matrix { eig, site } => {
            let k = u.modes();
            spectral_map(u, axis, grid, |v, xi, vec| {
                if xi == 0.0 {
                    return;
                }
                let (i, s) = site(v);
                let mut scratch = vec![Complex64::new(0.0, 0.0); k];
                eig[i].apply_function(
                    |lam| Complex64::from_polar(1.0, -xi * s * lam * dt),
                    vec,
                    &mut scratch,
                );
            })
        }
    }
}

/// Implicit step `(I + i zeta mu M) w' = w` per fast-phase mode, `mu = step/eps`.
pub fn backward_euler_tau(
    u: &mut Tensor,
    axis: usize,
    grid: &PeriodicGrid,
    generator: &Generator,
    mu: f64,
) {
    match generator {
        Generator::Scalar(c) => spectral_map(u, axis, grid, |v, zeta, vec| {
            let f = Complex64::new(1.0, zeta * mu * c(v)).inv();
            vec.iter_mut().for_each(|x| *x *= f);
        }),
        Generator::Matrix { eig, site } => {
            let k = u.modes();
            spectral_map(u, axis, grid, |v, zeta, vec| {
                if zeta == 0.0 {
                    return;
                }
                let (i, s) = site(v);
                let mut scratch = vec![Complex64::new(0.0, 0.0); k];
                eig[i].apply_function(
                    |lam| Complex64::new(1.0, zeta * mu * s * lam).inv(),
                    vec,
                    &mut scratch,
                );
            })
        }
    }
}

/// Cardinal weights of trigonometric interpolation on the `n`-point grid
/// of `[lo, lo + 2pi)` at `t`: the interpolant is `sum_j w_j f_j`.
/// The argument is reduced modulo `2pi` first; the Nyquist mode uses the
/// cosine form so real data interpolate to real values.
pub fn trig_weights(n: usize, lo: f64, t: f64) -> Vec<Complex64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let t = (t - lo).rem_euclid(two_pi);
    let h = two_pi / n as f64;
    let half = n / 2;
    (0..n)
        .map(|j| {
            let theta = t - j as f64 * h;
            let mut acc = Complex64::new(1.0, 0.0);
            let top = if n % 2 == 0 { half } else { half + 1 };
            for m in 1..top {
                acc += 2.0 * (m as f64 * theta).cos();
            }
            if n % 2 == 0 && n > 1 {
                acc += (half as f64 * theta).cos();
            }
            acc / n as f64
        })
        .collect()
}

/// Evaluates the trigonometric interpolant of samples on the fast-phase grid.
pub fn trig_interpolate(samples: &[Complex64], grid: &PeriodicGrid, t: f64) -> Complex64 {
    trig_weights(samples.len(), grid.lo(), t)
        .iter()
        .zip(samples)
        .map(|(w, s)| w * s)
        .sum()
}

/// Two-point Lagrange interpolation on sorted abscissae.
pub fn linear_interp<T>(abscissae: &[f64], values: &[T], x: f64) -> Result<T>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let (i, w) = bracket(abscissae, x)?;
    if w == 0.0 {
        return Ok(values[i]);
    }
    Ok(values[i] * (1.0 - w) + values[i + 1] * w)
}

/// Interval index `i` with `a[i] <= x <= a[i+1]` and the weight of `a[i+1]`.
pub fn bracket(abscissae: &[f64], x: f64) -> Result<(usize, f64)> {
    let n = abscissae.len();
    if n == 0 || !(x >= abscissae[0] && x <= abscissae[n - 1]) {
        return Err(Error::Extrapolation {
            point: x,
            lo: abscissae.first().copied().unwrap_or(f64::NAN),
            hi: abscissae.last().copied().unwrap_or(f64::NAN),
        });
    }
    if n == 1 {
        return Ok((0, 0.0));
    }
    let i = abscissae.partition_point(|&a| a <= x).clamp(1, n - 1) - 1;
    let w = (x - abscissae[i]) / (abscissae[i + 1] - abscissae[i]);
    Ok((i, w))
}
