//! Error metrics between a candidate profile and a reference at the grid
//! points they share.

use oscgpc_core::Statistic;

use crate::config::Norm;
use crate::error::CliError;
use crate::experiment::Profile;

/// One error entry: `observable.statistic` under `norm` over `points`
/// shared grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub observable: String,
    pub statistic: &'static str,
    pub norm: Norm,
    pub error: f64,
    pub points: usize,
}

impl ErrorRow {
    pub fn key(&self) -> String {
        format!("{}.{}", self.observable, self.statistic)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

impl ErrorReport {
    pub fn max_error(&self) -> f64 {
        self.rows.iter().map(|r| r.error).fold(0.0, f64::max)
    }

    pub fn get(&self, observable: &str, statistic: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.observable == observable && r.statistic == statistic)
            .map(|r| r.error)
    }

    pub const HEADER: [&'static str; 5] = ["observable", "statistic", "norm", "error", "points"];

    pub fn table_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.observable.clone(),
                    r.statistic.to_string(),
                    r.norm.label().to_string(),
                    crate::csvio::fmt_f64(r.error),
                    r.points.to_string(),
                ]
            })
            .collect()
    }
}

fn same_point(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Pairs `(candidate index, reference index)` of shared abscissae inside
/// `window` (inclusive).
pub fn shared_points(
    candidate: &[f64],
    reference: &[f64],
    window: Option<(f64, f64)>,
) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..reference.len()).collect();
    order.sort_by(|&a, &b| reference[a].total_cmp(&reference[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| reference[i]).collect();
    let inside = |x: f64| window.is_none_or(|(lo, hi)| x >= lo - 1e-12 && x <= hi + 1e-12);
    let mut out = Vec::new();
    for (i, &x) in candidate.iter().enumerate() {
        if !inside(x) {
            continue;
        }
        let pos = sorted.partition_point(|&r| r < x);
        for cand in [pos.wrapping_sub(1), pos] {
            if cand < sorted.len() && same_point(sorted[cand], x) {
                out.push((i, order[cand]));
                break;
            }
        }
    }
    out
}

/// `l2` is the root mean square over the shared points, so a constant
/// offset `c` has error `|c|` in both norms.
pub fn norm_of(diffs: impl Iterator<Item = f64>, norm: Norm) -> f64 {
    match norm {
        Norm::Linf => diffs.map(f64::abs).fold(0.0, f64::max),
        Norm::L2 => {
            let (mut s, mut n) = (0.0, 0usize);
            for d in diffs {
                s += d * d;
                n += 1;
            }
            if n == 0 {
                0.0
            } else {
                (s / n as f64).sqrt()
            }
        }
    }
}

/// Per-observable errors of mean and SD columns at shared grid points.
/// Observables missing from the reference are skipped.
pub fn compare_profiles(
    candidate: &Profile,
    reference: &Profile,
    norm: Norm,
    window: Option<(f64, f64)>,
) -> Result<ErrorReport, CliError> {
    if candidate.kind != reference.kind {
        return Err(CliError::GridMismatch(
            "candidate and reference are different models".into(),
        ));
    }
    let pairs = shared_points(&candidate.moments.x, &reference.moments.x, window);
    let mut rows = Vec::new();
    for obs in &candidate.moments.observables {
        let Some(r) = reference.moments.get(&obs.name) else {
            continue;
        };
        if pairs.is_empty() {
            return Err(CliError::GridMismatch(obs.name.clone()));
        }
        for &stat in candidate.kind.statistics() {
            let (a, b) = (obs.column(stat), r.column(stat));
            rows.push(ErrorRow {
                observable: obs.name.clone(),
                statistic: candidate.kind.label(stat),
                norm,
                error: norm_of(pairs.iter().map(|&(i, j)| a[i] - b[j]), norm),
                points: pairs.len(),
            });
        }
    }
    if rows.is_empty() {
        return Err(CliError::GridMismatch("no common observable".into()));
    }
    Ok(ErrorReport { rows })
}

/// Statistic for a column label of either schema.
pub fn statistic_from_label(label: &str) -> Option<Statistic> {
    match label {
        "mean_re" | "mean" => Some(Statistic::MeanRe),
        "mean_im" => Some(Statistic::MeanIm),
        "sd_re" | "sd" => Some(Statistic::SdRe),
        "sd_im" => Some(Statistic::SdIm),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::ProfileKind;
    use oscgpc_core::{MomentProfile, Observable};
    use proptest::prelude::*;

    fn prof(x: Vec<f64>, f: impl Fn(f64) -> f64) -> Profile {
        let mut obs = Observable::new("u", x.len());
        for (j, &xj) in x.iter().enumerate() {
            obs.mean_re[j] = f(xj);
            obs.mean_im[j] = -f(xj);
            obs.sd_re[j] = f(xj).abs();
            obs.sd_im[j] = 0.5;
        }
        Profile {
            kind: ProfileKind::Scalar,
            moments: MomentProfile {
                x,
                observables: vec![obs],
            },
        }
    }

    fn grid(n: usize) -> Vec<f64> {
        let h = std::f64::consts::PI / n as f64;
        (0..n)
            .map(|j| -std::f64::consts::FRAC_PI_2 + j as f64 * h)
            .collect()
    }

    #[test]
    fn identical_profiles_have_zero_error() {
        let p = prof(grid(16), f64::sin);
        let r = compare_profiles(&p, &p, Norm::Linf, None).unwrap();
        assert_eq!(r.max_error(), 0.0);
    }

    #[test]
    fn constant_offset_is_measured_exactly() {
        let a = prof(grid(16), f64::cos);
        let mut b = a.clone();
        for v in &mut b.moments.observables[0].mean_re {
            *v += 1e-3;
        }
        for norm in [Norm::Linf, Norm::L2] {
            let r = compare_profiles(&b, &a, norm, None).unwrap();
            let e = r.get("u", "mean_re").unwrap();
            assert!((e - 1e-3).abs() < 1e-15, "{e}");
            assert_eq!(r.get("u", "sd_im"), Some(0.0));
        }
    }

    #[test]
    fn coarse_grid_is_matched_inside_fine_grid() {
        let coarse = prof(grid(8), f64::sin);
        let fine = prof(grid(64), f64::sin);
        let r = compare_profiles(&coarse, &fine, Norm::Linf, None).unwrap();
        assert!(r.rows.iter().all(|row| row.points == 8));
        assert!(r.max_error() < 1e-15);
        let zoom = std::f64::consts::PI / 8.0;
        let r = compare_profiles(&coarse, &fine, Norm::Linf, Some((-zoom, zoom))).unwrap();
        assert_eq!(r.rows[0].points, 3);
    }

    #[test]
    fn disjoint_grids_are_an_error() {
        let a = prof(vec![0.1, 0.2], f64::sin);
        let b = prof(vec![0.15, 0.25], f64::sin);
        assert!(matches!(
            compare_profiles(&a, &b, Norm::Linf, None),
            Err(CliError::GridMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn linf_bounds_l2(d in proptest::collection::vec(-1.0f64..1.0, 1..50)) {
            let linf = norm_of(d.iter().copied(), Norm::Linf);
            let l2 = norm_of(d.iter().copied(), Norm::L2);
            prop_assert!(l2 <= linf * (1.0 + 1e-12));
        }
    }
}
