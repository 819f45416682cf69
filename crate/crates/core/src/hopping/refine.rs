//! Evaluation of geometric-optics reconstructions between momentum nodes.
//!
//! The profiles are smooth and periodic in `p`, so they are interpolated
//! trigonometrically; the phase is smooth but not periodic in `p`, so it is
//! interpolated by cubic Hermite polynomials from `S` and `S_p`.

use std::f64::consts::PI;

use crate::spectral::{trig_weights, PeriodicGrid};

/// Momentum grid refined by an integer factor: fine node `f = k * r + q`
/// sits at `p_k + q dp / r`.
#[derive(Debug, Clone)]
pub(crate) struct FineMomentum {
    pub factor: usize,
    np: usize,
    dp: f64,
    lo: f64,
    /// Trigonometric cardinal weights for each sub-offset `q`, indexed by
    /// the coarse node relative to the left neighbour.
    weights: Vec<Vec<f64>>,
}

impl FineMomentum {
    pub fn new(pg: &PeriodicGrid, factor: usize) -> Self {
        let factor = factor.max(1);
        let np = pg.len();
        let weights = (0..factor)
            .map(|q| {
                let theta = 2.0 * PI * q as f64 / (factor * np) as f64;
                trig_weights(np, 0.0, theta)
                    .into_iter()
                    .map(|w| w.re)
                    .collect()
            })
            .collect();
        FineMomentum {
            factor,
            np,
            dp: pg.spacing(),
            lo: pg.lo(),
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.np * self.factor
    }

    pub fn spacing(&self) -> f64 {
        self.dp / self.factor as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len())
            .map(|f| self.lo + f as f64 * self.spacing())
            .collect()
    }

    /// Coarse left neighbour and sub-offset of fine node `f`.
    pub fn split(&self, f: usize) -> (usize, usize) {
        (f / self.factor, f % self.factor)
    }

    /// Trigonometric interpolant of periodic coarse values at fine node `f`.
    pub fn interpolate<const N: usize>(
        &self,
        f: usize,
        value: impl Fn(usize) -> [f64; N],
    ) -> [f64; N] {
        let (k, q) = self.split(f);
        if q == 0 {
            return value(k);
        }
        let mut acc = [0.0; N];
        for (rel, w) in self.weights[q].iter().enumerate() {
            let v = value((k + rel) % self.np);
            for (a, b) in acc.iter_mut().zip(v) {
                *a += w * b;
            }
        }
        acc
    }

    /// Cubic Hermite interpolant of a non-periodic function from its values
    /// and derivatives at the coarse nodes. Past the last node the tangent
    /// line is used.
    pub fn hermite(
        &self,
        f: usize,
        value: impl Fn(usize) -> f64,
        slope: impl Fn(usize) -> f64,
    ) -> f64 {
        let (k, q) = self.split(f);
        let (s0, d0) = (value(k), slope(k));
        if q == 0 {
            return s0;
        }
        let delta = q as f64 * self.spacing();
        if k + 1 == self.np {
            return s0 + d0 * delta;
        }
        let (s1, d1) = (value(k + 1), slope(k + 1));
        let h = self.dp;
        let t = delta / h;
        let (t2, t3) = (t * t, t * t * t);
        s0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + d0 * h * (t3 - 2.0 * t2 + t)
            + s1 * (3.0 * t2 - 2.0 * t3)
            + d1 * h * (t3 - t2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_factor_is_the_grid() {
        let pg = PeriodicGrid::new(16, -2.0 * PI, 2.0 * PI).unwrap();
        let fm = FineMomentum::new(&pg, 1);
        assert_eq!(fm.nodes(), pg.nodes());
        assert_eq!(fm.interpolate(5, |k| [k as f64]), [5.0]);
    }

    #[test]
    fn trig_interpolation_reproduces_band_limited_data() {
        let pg = PeriodicGrid::new(16, -2.0 * PI, 2.0 * PI).unwrap();
        let fm = FineMomentum::new(&pg, 4);
        let f = |p: f64| (0.5 * p).sin() + 0.3 * (1.5 * p).cos();
        let p = pg.nodes();
        for (i, &pf) in fm.nodes().iter().enumerate() {
            let got = fm.interpolate(i, |k| [f(p[k])]);
            assert!((got[0] - f(pf)).abs() < 1e-13);
        }
    }

    #[test]
    fn hermite_is_exact_for_cubics() {
        let pg = PeriodicGrid::new(8, -2.0 * PI, 2.0 * PI).unwrap();
        let fm = FineMomentum::new(&pg, 5);
        let s = |p: f64| 0.2 * p * p * p - p * p + 3.0 * p - 1.0;
        let ds = |p: f64| 0.6 * p * p - 2.0 * p + 3.0;
        let p = pg.nodes();
        for (i, &pf) in fm.nodes().iter().enumerate().take(35) {
            let got = fm.hermite(i, |k| s(p[k]), |k| ds(p[k]));
            assert!((got - s(pf)).abs() < 1e-11);
        }
    }
}
