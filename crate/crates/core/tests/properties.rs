//! Property tests of the chaos and spectral kernels.

use proptest::prelude::*;

use oscgpc_core::chaos::{
    moments_from_coeffs, ChaosBasis, Family, GalerkinMatrix, GalerkinSpace, QuadratureRule,
};
use oscgpc_core::spectral::{
    backward_euler_tau, exact_advect_fourier, trig_weights, Generator, PeriodicGrid, Tensor,
};
use oscgpc_core::Complex64;

fn family() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::Legendre), Just(Family::Hermite)]
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #[test]
    fn gram_matrix_is_identity(fam in family(), p in 0usize..9, extra in 0usize..4) {
        let space = GalerkinSpace::with_default_rule(ChaosBasis::new(fam, p), 2 * p + 2 + extra).unwrap();
        let k = space.size();
        for i in 0..k {
            for j in 0..k {
                let g: f64 = (0..space.node_count()).map(|l| space.weights()[l] * space.psi(l)[i] * space.psi(l)[j]).sum();
                prop_assert!((g - f64::from(u8::from(i == j))).abs() < 1e-11);
            }
        }
    }

    /// Mean and SD read off the coefficients agree with quadrature over the
    /// expansion's values (Parseval).
    #[test]
    fn coefficient_moments_match_quadrature(fam in family(), coeffs in complex_vec(5)) {
        let space = GalerkinSpace::with_default_rule(ChaosBasis::new(fam, 4), 0).unwrap();
        let mut nodal = vec![Complex64::new(0.0, 0.0); space.node_count()];
        space.to_nodal(&coeffs, &mut nodal);
        let w = space.weights();
        let mean: Complex64 = nodal.iter().zip(w).map(|(u, w)| u * w).sum();
        let var: f64 = nodal.iter().zip(w).map(|(u, w)| (u - mean).norm_sqr() * w).sum();
        let m = moments_from_coeffs(&coeffs);
        prop_assert!((m.mean - mean).norm() < 1e-12);
        prop_assert!((m.sd - var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn weights_are_positive_and_sum_to_one(fam in family(), n in 1usize..40) {
        let rule = QuadratureRule::gauss(fam, n).unwrap();
        prop_assert!(rule.weights().iter().all(|&w| w > 0.0));
        prop_assert!((rule.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(rule.nodes().windows(2).all(|p| p[0] < p[1]));
    }

    /// The implicit fast-phase step never amplifies, whatever the symmetric
    /// positive semidefinite generator and step size.
    #[test]
    fn tau_step_contracts(b in prop::collection::vec(-1.0..1.0f64, 9), data in complex_vec(2 * 8 * 3), mu in 1e-4..1e4f64) {
        let k = 3;
        let mut m = vec![0.0; k * k];
        for r in 0..k {
            for s in 0..k {
                m[r * k + s] = (0..k).map(|t| b[r * k + t] * b[s * k + t]).sum();
            }
        }
        let eig = vec![GalerkinMatrix::from_row_major(k, m).unwrap().eigen().unwrap()];
        let site = |_v: usize| (0usize, 1.0);
        let gen = Generator::Matrix { eig: &eig, site: &site };
        let tau = PeriodicGrid::tau(8).unwrap();
        let mut u = Tensor::from_vec(&[2, 8, k], data).unwrap();
        let before = u.norm_l2();
        backward_euler_tau(&mut u, 1, &tau, &gen, mu);
        prop_assert!(u.norm_l2() <= before * (1.0 + 1e-13));
    }

    /// Exact advection is unitary on the grid.
    #[test]
    fn exact_advection_preserves_norm(data in complex_vec(16 * 2), c in -3.0..3.0f64, dt in 0.0..2.0f64) {
        let grid = PeriodicGrid::new(16, -std::f64::consts::PI, std::f64::consts::PI).unwrap();
        let speed = move |_v: usize| c;
        let mut u = Tensor::from_vec(&[16, 2], data).unwrap();
        let before = u.norm_l2();
        exact_advect_fourier(&mut u, 0, &grid, &Generator::Scalar(&speed), dt);
        prop_assert!((u.norm_l2() - before).abs() < 1e-12 * before.max(1.0));
    }

    /// Cardinal weights reproduce constants and are nodal at grid points.
    #[test]
    fn trig_weights_partition_unity(n in 2usize..33, t in -10.0..10.0f64, j in 0usize..32) {
        let w = trig_weights(n, 0.0, t);
        prop_assert!((w.iter().sum::<Complex64>() - 1.0).norm() < 1e-12);
        let j = j % n;
        let node = j as f64 * 2.0 * std::f64::consts::PI / n as f64;
        let w = trig_weights(n, 0.0, node);
        for (i, v) in w.iter().enumerate() {
            prop_assert!((v - f64::from(u8::from(i == j))).norm() < 1e-12);
        }
    }
}
