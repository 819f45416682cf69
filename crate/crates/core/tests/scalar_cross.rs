//! Cross-solver agreement on the scalar model.

use oscgpc_core::moments::{MomentProfile, Observable, Statistic};
use oscgpc_core::scalar::{
    solve_collocation, solve_scalar, ScalarConfig, ScalarMethod, ScalarProblem,
};

fn max_diff(a: &MomentProfile, b: &MomentProfile, stats: &[Statistic]) -> f64 {
    let (u, v) = (a.get("u").unwrap(), b.get("u").unwrap());
    stats
        .iter()
        .flat_map(|&s| {
            u.column(s)
                .iter()
                .zip(v.column(s))
                .map(|(x, y)| (x - y).abs())
                .collect::<Vec<_>>()
        })
        .fold(0.0, f64::max)
}

fn cfg(k: usize, dt: f64, t_final: f64) -> ScalarConfig {
    ScalarConfig {
        nx: 32,
        k,
        dt,
        t_final,
        ns: 16,
        ..Default::default()
    }
}

/// Without a fast scale the geometric-optics solvers reproduce the direct
/// one. At eps = 1 the profile depends on tau at O(1), so the fast-phase
/// grid must resolve it (8 points leave ~6e-3, 32 leave ~3e-4).
#[test]
fn profile_solvers_match_direct_at_unit_eps() {
    let p = ScalarProblem::example21(1.0);
    let c = ScalarConfig {
        ntau: 32,
        ..cfg(4, 1e-3, 0.1)
    };
    let direct = solve_scalar(&p, &c, ScalarMethod::Direct)
        .unwrap()
        .sample_moments();
    for m in [ScalarMethod::N1, ScalarMethod::N2] {
        let got = solve_scalar(&p, &c, m).unwrap().sample_moments();
        let e = max_diff(&got, &direct, &Statistic::ALL);
        assert!(e < 5e-3, "{m:?}: {e:e}");
    }
}

/// N2 on the linear problem is accurate for every wavelength at fixed K.
#[test]
fn n2_linear_accuracy_is_eps_independent() {
    for eps in [1e-1, 1e-2, 1e-3] {
        let p = ScalarProblem::linear(eps);
        let c = cfg(8, 1e-3, 0.1);
        let out = solve_scalar(&p, &c, ScalarMethod::N2).unwrap();
        let mut exact = Vec::new();
        for &x in &out.x {
            for &z in &out.nodes {
                exact.push(p.linear_exact(0.1, x, z));
            }
        }
        let want = MomentProfile {
            x: out.x.clone(),
            observables: vec![Observable::from_samples("u", &exact, &out.weights)],
        };
        let e = max_diff(&out.sample_moments(), &want, &Statistic::ALL);
        assert!(e < 1e-5, "eps {eps}: {e:e}");
    }
}

/// On the linear problem, Galerkin with K modes and collocation on the K
/// Gauss nodes are the same quadrature projection.
#[test]
fn galerkin_and_collocation_coincide_when_linear() {
    let p = ScalarProblem::linear(0.1);
    for k in [3, 6] {
        let c = cfg(k, 1e-3, 0.5);
        let sg = solve_scalar(&p, &c, ScalarMethod::Direct)
            .unwrap()
            .moments();
        let sc = solve_collocation(&p, &c, ScalarMethod::Direct, k)
            .unwrap()
            .moments();
        let e = max_diff(&sg, &sc, &Statistic::ALL);
        assert!(e < 1e-10, "K = {k}: {e:e}");
    }
}

#[test]
fn collocation_and_galerkin_agree_when_resolved() {
    let p = ScalarProblem::example21(0.1);
    let c = cfg(8, 1e-4, 0.1);
    let sg = solve_scalar(&p, &c, ScalarMethod::Direct)
        .unwrap()
        .moments();
    let sc = solve_collocation(&p, &c, ScalarMethod::Direct, 64)
        .unwrap()
        .moments();
    let e = max_diff(&sg, &sc, &[Statistic::MeanRe, Statistic::MeanIm]);
    assert!(e < 1e-4, "{e:e}");
}

/// `V(T, tau)` and `W(S(T), tau)` give the same field.
#[test]
fn physical_and_phase_time_profiles_agree() {
    for eps in [0.5, 0.1] {
        let p = ScalarProblem::example21(eps);
        let c = ScalarConfig {
            ds: Some(1e-3),
            ..cfg(4, 1e-3, 0.1)
        };
        let a = solve_scalar(&p, &c, ScalarMethod::N1).unwrap();
        let b = solve_scalar(&p, &c, ScalarMethod::N2).unwrap();
        let e = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max);
        assert!(e < 1e-2, "eps {eps}: {e:e}");
    }
}
