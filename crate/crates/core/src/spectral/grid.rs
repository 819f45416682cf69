use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on `[lo, hi)`; the right endpoint is identified
/// with the left one and is not a node.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    n: usize,
    lo: f64,
    hi: f64,
}

impl PeriodicGrid {
    pub fn new(n: usize, lo: f64, hi: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("periodic grid needs at least one node"));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config(format!(
                "invalid periodic domain [{lo}, {hi})"
            )));
        }
        Ok(PeriodicGrid { n, lo, hi })
    }

    /// The fast-phase grid on `[0, 2pi)`.
    pub fn tau(n: usize) -> Result<Self> {
        Self::new(n, 0.0, 2.0 * PI)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn period(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn spacing(&self) -> f64 {
        self.period() / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.lo + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Index of the unpaired highest mode, if any.
    pub fn nyquist(&self) -> Option<usize> {
        (self.n % 2 == 0 && self.n > 1).then_some(self.n / 2)
    }

    /// Angular wavenumbers in FFT layout (`0, 1, .., n/2-1, -n/2, .., -1`
    /// scaled by `2pi / period`).
    pub fn wavenumbers(&self) -> Vec<f64> {
        let scale = 2.0 * PI / self.period();
        let n = self.n as i64;
        (0..n)
            .map(|m| {
                let signed = if m < (n + 1) / 2 { m } else { m - n };
                signed as f64 * scale
            })
            .collect()
    }

    /// Wavenumbers used by first-order (odd) operators: the Nyquist entry is
    /// zeroed so real fields stay real.
    pub fn odd_wavenumbers(&self) -> Vec<f64> {
        let mut w = self.wavenumbers();
        if let Some(q) = self.nyquist() {
            w[q] = 0.0;
        }
        w
    }

    /// Position of the node at or just below `x` after periodic reduction,
    /// together with the fractional offset in `[0, 1)`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let t = (x - self.lo).rem_euclid(self.period()) / self.spacing();
        let j = (t.floor() as usize).min(self.n - 1);
        (j, t - j as f64)
    }
}
