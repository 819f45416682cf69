use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Direction of an axis transform. The inverse is normalized by `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// In-place transform of consecutive length-`n` lines stored in `buf`.
pub fn fft_lines(buf: &mut [Complex64], n: usize, dir: Direction) {
    if n <= 1 {
        return;
    }
    let (fwd, inv) = plans(n);
    let plan = match dir {
        Direction::Forward => fwd,
        Direction::Inverse => inv,
    };
    // Batches of lines go to separate workers; each batch reuses one scratch.
    let lines_per_batch = (1 << 14) / n + 1;
    buf.par_chunks_mut(n * lines_per_batch).for_each(|chunk| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(chunk, &mut scratch);
    });
    if dir == Direction::Inverse {
        let s = 1.0 / n as f64;
        buf.par_iter_mut().for_each(|v| *v *= s);
    }
}

/// Dense complex row-major tensor. Solvers keep the gPC mode axis last so
/// the `K` coefficients at a site are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<Complex64>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Self {
        let len = dims.iter().product();
        Tensor {
            dims: dims.to_vec(),
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    pub fn from_vec(dims: &[usize], data: Vec<Complex64>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::Contract(format!(
                "tensor of shape {dims:?} needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor {
            dims: dims.to_vec(),
            data,
        })
    }

    pub fn from_fn(dims: &[usize], f: impl Fn(&[usize]) -> Complex64) -> Self {
        let mut t = Self::zeros(dims);
        let mut idx = vec![0usize; dims.len()];
        for v in t.data.iter_mut() {
            *v = f(&idx);
            for a in (0..idx.len()).rev() {
                idx[a] += 1;
                if idx[a] < dims[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// Elements between consecutive entries along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.dims[axis + 1..].iter().product()
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: Complex64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    /// Length of the trailing (gPC mode) axis.
    pub fn modes(&self) -> usize {
        *self.dims.last().unwrap_or(&1)
    }

    /// Position along `axis` of the trailing-axis vector with index `v`.
    pub fn axis_position(&self, v: usize, axis: usize) -> usize {
        (v * self.modes() / self.stride(axis)) % self.dims[axis]
    }

    pub fn axpy(&mut self, s: f64, other: &Tensor) {
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b * s);
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.im.abs()))
    }

    pub fn norm_l2(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Transforms every line along `axis` in place.
    pub fn fft_axis(&mut self, axis: usize, dir: Direction) {
        let n = self.dims[axis];
        if n <= 1 {
            return;
        }
        let st = self.stride(axis);
        if st == 1 {
            fft_lines(&mut self.data, n, dir);
            return;
        }
        let block = n * st;
        let outer = self.data.len() / block;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.data.len()];
        // gather: line (o, i) -> buf[(o * st + i) * n ..]
        for o in 0..outer {
            let src = &self.data[o * block..(o + 1) * block];
            let dst = &mut buf[o * block..(o + 1) * block];
            for j in 0..n {
                for i in 0..st {
                    dst[i * n + j] = src[j * st + i];
                }
            }
        }
        fft_lines(&mut buf, n, dir);
        for o in 0..outer {
            let src = &buf[o * block..(o + 1) * block];
            let dst = &mut self.data[o * block..(o + 1) * block];
            for j in 0..n {
                for i in 0..st {
                    dst[j * st + i] = src[i * n + j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn indexing() {
        let t = Tensor::from_fn(&[2, 3, 4], |i| {
            c((i[0] * 100 + i[1] * 10 + i[2]) as f64, 0.0)
        });
        assert_eq!(t.get(&[1, 2, 3]).re, 123.0);
        assert_eq!(t.stride(0), 12);
        assert_eq!(t.axis_position(5, 1), 2);
        assert_eq!(t.axis_position(5, 0), 1);
    }

    #[test]
    fn axis_transform_roundtrip_and_matches_dft() {
        let t0 = Tensor::from_fn(&[3, 8, 2], |i| {
            c((i[0] as f64 + 1.3 * i[1] as f64).sin(), i[2] as f64 * 0.1)
        });
        let mut t = t0.clone();
        t.fft_axis(1, Direction::Forward);
        // naive DFT along axis 1 at a sample line
        for m in 0..8 {
            let mut acc = c(0.0, 0.0);
            for j in 0..8 {
                let ang = -2.0 * std::f64::consts::PI * (m * j) as f64 / 8.0;
                acc += t0.get(&[2, j, 1]) * Complex64::from_polar(1.0, ang);
            }
            assert!((acc - t.get(&[2, m, 1])).norm() < 1e-12);
        }
        t.fft_axis(1, Direction::Inverse);
        assert!(t.max_abs_diff(&t0) < 1e-14);
        let mut u = t0.clone();
        u.fft_axis(2, Direction::Forward);
        u.fft_axis(2, Direction::Inverse);
        assert!(u.max_abs_diff(&t0) < 1e-15);
    }

    #[test]
    fn shape_checked() {
        assert!(Tensor::from_vec(&[2, 2], vec![c(0.0, 0.0); 3]).is_err());
    }
}
