//! Per-grid-point statistics of solver output.

use num_complex::Complex64;

use crate::chaos::moments_from_coeffs;

/// Mean and standard deviation of the real and imaginary parts of one
/// observable along a grid. Real observables leave the imaginary columns zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub name: String,
    pub mean_re: Vec<f64>,
    pub mean_im: Vec<f64>,
    pub sd_re: Vec<f64>,
    pub sd_im: Vec<f64>,
}

impl Observable {
    pub fn new(name: impl Into<String>, n: usize) -> Self {
        Observable {
            name: name.into(),
            mean_re: vec![0.0; n],
            mean_im: vec![0.0; n],
            sd_re: vec![0.0; n],
            sd_im: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.mean_re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean_re.is_empty()
    }

    pub fn set(&mut self, j: usize, s: PointStats) {
        self.mean_re[j] = s.mean.re;
        self.mean_im[j] = s.mean.im;
        self.sd_re[j] = s.sd_re;
        self.sd_im[j] = s.sd_im;
    }

    /// Statistics of quadrature samples: `values[j * n_nodes + l]` at grid
    /// point `j` and node `l`.
    pub fn from_samples(name: impl Into<String>, values: &[Complex64], weights: &[f64]) -> Self {
        let nn = weights.len();
        let n = values.len() / nn;
        let mut obs = Observable::new(name, n);
        for j in 0..n {
            obs.set(
                j,
                PointStats::from_samples(&values[j * nn..(j + 1) * nn], weights),
            );
        }
        obs
    }

    /// Statistics read from gPC coefficients: `coeffs[j * K + k]`.
    pub fn from_coefficients(name: impl Into<String>, coeffs: &[Complex64], k: usize) -> Self {
        let n = coeffs.len() / k;
        let mut obs = Observable::new(name, n);
        for j in 0..n {
            obs.set(
                j,
                PointStats::from_coefficients(&coeffs[j * k..(j + 1) * k]),
            );
        }
        obs
    }

    /// Named column, for the comparison tooling.
    pub fn column(&self, which: Statistic) -> &[f64] {
        match which {
            Statistic::MeanRe => &self.mean_re,
            Statistic::MeanIm => &self.mean_im,
            Statistic::SdRe => &self.sd_re,
            Statistic::SdIm => &self.sd_im,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    MeanRe,
    MeanIm,
    SdRe,
    SdIm,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [
        Statistic::MeanRe,
        Statistic::MeanIm,
        Statistic::SdRe,
        Statistic::SdIm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Statistic::MeanRe => "mean_re",
            Statistic::MeanIm => "mean_im",
            Statistic::SdRe => "sd_re",
            Statistic::SdIm => "sd_im",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointStats {
    pub mean: Complex64,
    pub sd_re: f64,
    pub sd_im: f64,
}

impl PointStats {
    /// Quadrature mean and centred standard deviations of the real and
    /// imaginary parts.
    pub fn from_samples(values: &[Complex64], weights: &[f64]) -> Self {
        let mean: Complex64 = values.iter().zip(weights).map(|(v, w)| v * w).sum();
        let (mut vr, mut vi) = (0.0, 0.0);
        for (v, w) in values.iter().zip(weights) {
            vr += w * (v.re - mean.re).powi(2);
            vi += w * (v.im - mean.im).powi(2);
        }
        PointStats {
            mean,
            sd_re: vr.max(0.0).sqrt(),
            sd_im: vi.max(0.0).sqrt(),
        }
    }

    pub fn from_coefficients(coeffs: &[Complex64]) -> Self {
        let m = moments_from_coeffs(coeffs);
        PointStats {
            mean: m.mean,
            sd_re: m.sd_re,
            sd_im: m.sd_im,
        }
    }
}

/// Moments of every observable of a run on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentProfile {
    pub x: Vec<f64>,
    pub observables: Vec<Observable>,
}

impl MomentProfile {
    pub fn get(&self, name: &str) -> Option<&Observable> {
        self.observables.iter().find(|o| o.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.observables.iter().map(|o| o.name.as_str()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_statistics() {
        // u = z on the two-point uniform rule: mean 0, sd 1/sqrt(3)
        let r = 1.0 / 3f64.sqrt();
        let s = PointStats::from_samples(
            &[Complex64::new(-r, 0.0), Complex64::new(r, 0.0)],
            &[0.5, 0.5],
        );
        assert!(s.mean.norm() < 1e-16);
        assert!((s.sd_re - r).abs() < 1e-15);
        assert_eq!(s.sd_im, 0.0);
    }

    #[test]
    fn deterministic_samples_have_zero_sd() {
        let v = [Complex64::new(0.3, -1.1); 5];
        let s = PointStats::from_samples(&v, &[0.2; 5]);
        assert!(s.sd_re < 1e-12 && s.sd_im < 1e-12);
    }

    #[test]
    fn observable_layout() {
        let coeffs = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(2.0, 1.0),
            Complex64::new(3.0, 4.0),
        ];
        let o = Observable::from_coefficients("u", &coeffs, 2);
        assert_eq!(o.len(), 2);
        assert_eq!(o.mean_re, vec![1.0, 2.0]);
        assert_eq!(o.sd_re, vec![0.0, 3.0]);
        assert_eq!(o.sd_im, vec![0.0, 4.0]);
    }
}
