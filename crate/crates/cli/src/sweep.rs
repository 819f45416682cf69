//! Convergence sweeps against a fixed, cached reference.

use std::path::Path;

use crate::cache::ReferenceCache;
use crate::compare::compare_profiles;
use crate::config::{ExperimentConfig, Model, Norm, Preset};
use crate::csvio::{fmt_f64, write_profile, write_table};
use crate::error::CliError;
use crate::experiment::run_experiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Dt,
    /// Grid spacing; each value sets `nx = round(L / dx)`.
    Dx,
    K,
    Eps,
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            SweepParam::Dt => "dt",
            SweepParam::Dx => "dx",
            SweepParam::K => "k",
            SweepParam::Eps => "eps",
        }
    }

    /// Whether a log-log slope against this parameter is an order.
    pub fn has_order(self) -> bool {
        matches!(self, SweepParam::Dt | SweepParam::Dx)
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dt" => Ok(SweepParam::Dt),
            "dx" => Ok(SweepParam::Dx),
            "k" => Ok(SweepParam::K),
            "eps" => Ok(SweepParam::Eps),
            _ => Err(format!("unknown sweep parameter {s:?} (dt | dx | k | eps)")),
        }
    }
}

/// Length of the periodic `x` interval of the configured problem.
pub fn x_length(cfg: &ExperimentConfig) -> f64 {
    use std::f64::consts::PI;
    let custom = cfg.custom.as_ref();
    match (cfg.preset, cfg.model) {
        (Preset::Example21 | Preset::Linear, _) => PI,
        (Preset::Example41 | Preset::Example41BigGap, _) => 4.0 * PI,
        (Preset::Custom, Model::Scalar) => custom.and_then(|c| c.domain).map_or(PI, |[a, b]| b - a),
        (Preset::Custom, Model::Hopping) => custom
            .and_then(|c| c.x_domain)
            .map_or(4.0 * PI, |[a, b]| b - a),
    }
}

/// `cfg` with the swept parameter set to `value`.
pub fn with_param(
    cfg: &ExperimentConfig,
    param: SweepParam,
    value: f64,
) -> Result<ExperimentConfig, CliError> {
    let mut c = cfg.clone();
    match param {
        SweepParam::Dt => c.dt = value,
        SweepParam::Dx => {
            if !(value > 0.0) {
                return Err(CliError::Config(format!(
                    "dx must be positive, got {value}"
                )));
            }
            c.nx = (x_length(cfg) / value).round().max(1.0) as usize;
        }
        SweepParam::K => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(CliError::Config(format!(
                    "k must be a positive integer, got {value}"
                )));
            }
            if !c.method.is_galerkin() {
                return Err(CliError::Config("a k sweep needs a Galerkin method".into()));
            }
            c.k = Some(value as usize);
        }
        SweepParam::Eps => {
            if !(value > 0.0 && value <= 1.0) {
                return Err(CliError::Config(format!(
                    "eps must lie in (0, 1], got {value}"
                )));
            }
            c.eps = value;
        }
    }
    let bad = c.violations();
    if bad.is_empty() {
        Ok(c)
    } else {
        Err(CliError::Config(bad.join("; ")))
    }
}

/// Log-log slope between consecutive `(value, error)` pairs; `None` for
/// the first entry and wherever the slope is undefined.
pub fn observed_orders(values: &[f64], errors: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None; values.len()];
    for i in 1..values.len() {
        let (v0, v1, e0, e1) = (values[i - 1], values[i], errors[i - 1], errors[i]);
        if v0 > 0.0 && v1 > 0.0 && v0 != v1 && e0 > 0.0 && e1 > 0.0 {
            out[i] = Some((e1 / e0).ln() / (v1 / v0).ln());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    /// `observable.statistic`
    pub observable: String,
    pub norm: Norm,
    pub error: f64,
    pub order: Option<f64>,
}

pub const SWEEP_HEADER: [&str; 5] = [
    "param_value",
    "observable",
    "norm",
    "error",
    "observed_order",
];

pub fn sweep_rows_csv(rows: &[SweepRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                fmt_f64(r.value),
                r.observable.clone(),
                r.norm.label().to_string(),
                fmt_f64(r.error),
                r.order.map(fmt_f64).unwrap_or_default(),
            ]
        })
        .collect()
}

/// Runs `base` once per value against its reference (from `cache`), and
/// returns one row per value and compared column. When `out` is given each
/// member's profile goes to `out/<param>=<value>/` and the table to
/// `out/sweep.csv`.
pub fn convergence_sweep(
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    cache: &ReferenceCache,
    out: Option<&Path>,
) -> Result<Vec<SweepRow>, CliError> {
    if values.len() < 3 {
        return Err(CliError::Config(format!(
            "a sweep needs at least 3 values, got {}",
            values.len()
        )));
    }
    let members: Vec<ExperimentConfig> = values
        .iter()
        .map(|&v| with_param(base, param, v))
        .collect::<Result<_, _>>()?;
    let mut reports = Vec::new();
    for (member, &v) in members.iter().zip(values) {
        let reference = cache.load_or_run(&member.reference_config())?;
        let run = run_experiment(member)?;
        if let Some(dir) = out {
            write_profile(&dir.join(format!("{}={}", param.label(), v)), &run.profile)?;
        }
        reports.push(compare_profiles(
            &run.profile,
            &reference,
            base.compare.norm,
            base.compare.window(),
        )?);
    }
    let mut rows = Vec::new();
    let keys: Vec<String> = reports[0].rows.iter().map(|r| r.key()).collect();
    for key in keys {
        let errors: Vec<f64> = reports
            .iter()
            .map(|rep| {
                rep.rows
                    .iter()
                    .find(|r| r.key() == key)
                    .map_or(f64::NAN, |r| r.error)
            })
            .collect();
        let orders = if param.has_order() {
            observed_orders(values, &errors)
        } else {
            vec![None; values.len()]
        };
        for ((&v, &e), o) in values.iter().zip(&errors).zip(orders) {
            rows.push(SweepRow {
                value: v,
                observable: key.clone(),
                norm: base.compare.norm,
                error: e,
                order: o,
            });
        }
    }
    if let Some(dir) = out {
        write_table(
            &dir.join("sweep.csv"),
            &SWEEP_HEADER,
            &sweep_rows_csv(&rows),
        )?;
    }
    Ok(rows)
}
