#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Batch experiment runner for the oscgpc solvers: configuration, preset
//! problems, reference generation and caching, error metrics, CSV output
//! and convergence sweeps.

pub mod cache;
pub mod compare;
pub mod config;
pub mod csvio;
pub mod error;
pub mod experiment;
pub mod expr;
pub mod sweep;

use std::path::{Path, PathBuf};

pub use cache::ReferenceCache;
pub use compare::{compare_profiles, ErrorReport, ErrorRow};
pub use config::{load_config, ExperimentConfig, Method, Model, Norm, Preset};
pub use error::CliError;
pub use experiment::{run_experiment, Profile, ProfileKind, RunOutput};
pub use sweep::{convergence_sweep, SweepParam, SweepRow};

/// Environment variable holding the worker thread count.
pub const THREADS_VAR: &str = "OSCGPC_THREADS";

/// Sizes the global thread pool from [`THREADS_VAR`] when it is set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "{THREADS_VAR} must be a positive integer, got {v:?}"
        ))
    })?;
    // a second initialisation (tests) keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// What `run` produced.
#[derive(Debug)]
pub struct RunSummary {
    pub files: Vec<PathBuf>,
    pub report: Option<ErrorReport>,
}

/// Runs `cfg`, writes `<out>/<observable>.csv` and the resolved
/// `config.toml`; with `reference` also compares against the cached
/// reference and writes `errors.csv`. A configured threshold that is
/// exceeded is reported as [`CliError::Threshold`] after all files are
/// written.
pub fn run_command(
    cfg: &ExperimentConfig,
    out: &Path,
    cache: Option<&ReferenceCache>,
) -> Result<RunSummary, CliError> {
    let run = run_experiment(cfg)?;
    let mut files = csvio::write_profile(out, &run.profile)?;
    let echo = format!("# hash = {}\n{}", cfg.hash(), cfg.to_toml());
    let cfg_path = out.join("config.toml");
    csvio::write_atomic(&cfg_path, &echo)?;
    files.push(cfg_path);
    if cfg.dump_coefficients {
        match &run.coefficients {
            Some((k, c)) => {
                let p = out.join("coefficients.csv");
                csvio::write_coefficients(&p, &run.profile.moments.x, *k, c)?;
                files.push(p);
            }
            None => log::warn!(
                "method {:?} does not produce gPC coefficients of the solution",
                cfg.method
            ),
        }
    }
    let Some(cache) = cache else {
        return Ok(RunSummary {
            files,
            report: None,
        });
    };
    let reference = cache.load_or_run(&cfg.reference_config())?;
    let report = compare_profiles(
        &run.profile,
        &reference,
        cfg.compare.norm,
        cfg.compare.window(),
    )?;
    let p = out.join("errors.csv");
    csvio::write_table(&p, &ErrorReport::HEADER, &report.table_rows())?;
    files.push(p);
    check_threshold(&report, cfg.compare.threshold)?;
    Ok(RunSummary {
        files,
        report: Some(report),
    })
}

/// [`CliError::Threshold`] naming the worst column when it exceeds `threshold`.
pub fn check_threshold(report: &ErrorReport, threshold: Option<f64>) -> Result<(), CliError> {
    let Some(t) = threshold else { return Ok(()) };
    if let Some(worst) = report
        .rows
        .iter()
        .max_by(|a, b| a.error.total_cmp(&b.error))
    {
        if worst.error > t || worst.error.is_nan() {
            return Err(CliError::Threshold {
                what: worst.key(),
                error: worst.error,
                threshold: t,
            });
        }
    }
    Ok(())
}
