//! Dispatch from a resolved configuration to the solvers.

use std::sync::Arc;

use oscgpc_core::hopping::{self, HoppingConfig, HoppingMethod, HoppingProblem};
use oscgpc_core::scalar::{
    self, Nonlinearity, ScalarConfig, ScalarMethod, ScalarOutcome, ScalarProblem,
};
use oscgpc_core::{Complex64, MomentProfile, QuadratureRule, Statistic};

use crate::config::{self, ExperimentConfig, Method, Model, Preset};
use crate::error::CliError;
use crate::expr::Expr;

/// Which statistics columns a profile carries: the scalar field is complex,
/// the hopping observables are real.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Scalar,
    Hopping,
}

impl ProfileKind {
    pub fn statistics(self) -> &'static [Statistic] {
        match self {
            ProfileKind::Scalar => &Statistic::ALL,
            ProfileKind::Hopping => &[Statistic::MeanRe, Statistic::SdRe],
        }
    }

    /// Column label of a statistic in this kind's CSV schema.
    pub fn label(self, s: Statistic) -> &'static str {
        match (self, s) {
            (ProfileKind::Hopping, Statistic::MeanRe) => "mean",
            (ProfileKind::Hopping, Statistic::SdRe) => "sd",
            _ => s.label(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub kind: ProfileKind,
    pub moments: MomentProfile,
}

/// Result of [`run_experiment`]: final-time moments plus, when the solver
/// produced them, the gPC coefficients of `u` as `(K, coeffs[j * K + k])`.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub profile: Profile,
    pub coefficients: Option<(usize, Vec<Complex64>)>,
}

fn splitting(s: config::Splitting) -> scalar::Splitting {
    match s {
        config::Splitting::Lie => scalar::Splitting::Lie,
        config::Splitting::Strang => scalar::Splitting::Strang,
    }
}

fn family(f: Option<config::Family>) -> oscgpc_core::Family {
    match f {
        Some(config::Family::Hermite) => oscgpc_core::Family::Hermite,
        _ => oscgpc_core::Family::Legendre,
    }
}

fn expr(key: &str, src: &Option<String>, vars: &[&'static str]) -> Result<Option<Expr>, CliError> {
    src.as_deref()
        .map(|s| Expr::compile(key, s, vars))
        .transpose()
}

fn required(key: &str, e: Option<Expr>) -> Result<Expr, CliError> {
    e.ok_or_else(|| CliError::Config(format!("custom.{key} is required")))
}

pub fn scalar_problem(cfg: &ExperimentConfig) -> Result<ScalarProblem, CliError> {
    match cfg.preset {
        Preset::Example21 => Ok(ScalarProblem::example21(cfg.eps)),
        Preset::Linear => Ok(ScalarProblem::linear(cfg.eps)),
        Preset::Custom => {
            let c = cfg.custom.clone().unwrap_or_default();
            let speed = expr("speed", &c.speed, &["x"])?;
            let osc = required(
                "oscillation",
                expr("oscillation", &c.oscillation, &["x", "z"])?,
            )?;
            let re = required(
                "initial_re",
                expr("initial_re", &c.initial_re, &["x", "z"])?,
            )?;
            let im = expr("initial_im", &c.initial_im, &["x", "z"])?;
            let nonlinearity = match c.nonlinearity.as_deref() {
                None | Some("zero") => Nonlinearity::Zero,
                Some("identity") => Nonlinearity::Identity,
                Some("rational-square") => Nonlinearity::RationalSquare,
                Some(other) => {
                    return Err(CliError::Config(format!("custom.nonlinearity {other:?}")))
                }
            };
            let [lo, hi] = c
                .domain
                .unwrap_or([-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2]);
            Ok(ScalarProblem {
                speed: match speed {
                    Some(e) => Arc::new(move |x| e.eval(&[x])),
                    None => Arc::new(|_| 1.0),
                },
                oscillation: Arc::new(move |x, z| osc.eval(&[x, z])),
                nonlinearity,
                initial: Arc::new(move |x, z| {
                    Complex64::new(
                        re.eval(&[x, z]),
                        im.as_ref().map_or(0.0, |e| e.eval(&[x, z])),
                    )
                }),
                eps: cfg.eps,
                domain: (lo, hi),
                family: family(c.family),
            })
        }
        _ => Err(CliError::Config(format!(
            "preset {:?} is not a scalar problem",
            cfg.preset
        ))),
    }
}

pub fn hopping_problem(cfg: &ExperimentConfig) -> Result<HoppingProblem, CliError> {
    match cfg.preset {
        Preset::Example41 => Ok(HoppingProblem::example41(cfg.eps)),
        Preset::Example41BigGap => Ok(HoppingProblem::example41_big_gap(cfg.eps)),
        Preset::Custom => {
            let c = cfg.custom.clone().unwrap_or_default();
            let xz = ["x", "z"];
            let xp = ["x", "p"];
            let gap = required("gap", expr("gap", &c.gap, &xz)?)?;
            let gap_dx = required("gap_dx", expr("gap_dx", &c.gap_dx, &xz)?)?;
            let coupling = required("coupling", expr("coupling", &c.coupling, &xp)?)?;
            let fp = required("f_plus", expr("f_plus", &c.f_plus, &xp)?)?;
            let fm = required("f_minus", expr("f_minus", &c.f_minus, &xp)?)?;
            let fr = expr("f_inter_re", &c.f_inter_re, &xp)?;
            let fi = expr("f_inter_im", &c.f_inter_im, &xp)?;
            let two_pi = 2.0 * std::f64::consts::PI;
            let [xl, xh] = c.x_domain.unwrap_or([-two_pi, two_pi]);
            let [pl, ph] = c.p_domain.unwrap_or([-two_pi, two_pi]);
            Ok(HoppingProblem {
                gap: Arc::new(move |x, z| gap.eval(&[x, z])),
                gap_dx: Arc::new(move |x, z| gap_dx.eval(&[x, z])),
                coupling: Arc::new(move |x, p| coupling.eval(&[x, p])),
                f_plus: Arc::new(move |x, p| fp.eval(&[x, p])),
                f_minus: Arc::new(move |x, p| fm.eval(&[x, p])),
                f_inter: Arc::new(move |x, p| {
                    Complex64::new(
                        fr.as_ref().map_or(0.0, |e| e.eval(&[x, p])),
                        fi.as_ref().map_or(0.0, |e| e.eval(&[x, p])),
                    )
                }),
                eps: cfg.eps,
                x_domain: (xl, xh),
                p_domain: (pl, ph),
                family: family(c.family),
            })
        }
        _ => Err(CliError::Config(format!(
            "preset {:?} is not a hopping problem",
            cfg.preset
        ))),
    }
}

pub fn scalar_config(cfg: &ExperimentConfig) -> ScalarConfig {
    ScalarConfig {
        nx: cfg.nx,
        // collocation runs one-mode point problems
        k: cfg.k.unwrap_or(1),
        ng: cfg.ng,
        ntau: cfg.ntau,
        dt: cfg.dt,
        ds: cfg.ds,
        t_final: cfg.t_final,
        ns: cfg.ns,
        transport: match cfg.transport {
            config::Transport::Spectral => scalar::TransportScheme::Spectral,
            config::Transport::Upwind => scalar::TransportScheme::Upwind,
        },
        splitting: splitting(cfg.splitting),
    }
}

pub fn hopping_config(cfg: &ExperimentConfig) -> HoppingConfig {
    HoppingConfig {
        nx: cfg.nx,
        np: cfg.np,
        k: cfg.k.unwrap_or(1),
        ng: cfg.ng,
        ntau: cfg.ntau,
        dt: cfg.dt,
        ds: cfg.ds,
        t_final: cfg.t_final,
        ns: cfg.ns,
        splitting: splitting(cfg.splitting),
        source: match cfg.source {
            config::Source::CrankNicolson => hopping::SourceScheme::CrankNicolson,
            config::Source::Exact => hopping::SourceScheme::Exact,
        },
        profile_source: match cfg.profile_source {
            config::ProfileSource::ForwardEuler => hopping::ProfileSource::ForwardEuler,
            config::ProfileSource::Midpoint => hopping::ProfileSource::Midpoint,
        },
        density_refine: cfg.density_refine,
    }
}

/// Analytic linear solution sampled at `nc` Gauss nodes.
fn exact_linear(
    problem: &ScalarProblem,
    cfg: &ExperimentConfig,
) -> Result<ScalarOutcome, oscgpc_core::Error> {
    let rule = QuadratureRule::gauss(problem.family, cfg.nc)?;
    let x = problem.grid(cfg.nx)?.nodes();
    let mut values = Vec::with_capacity(x.len() * cfg.nc);
    for &xj in &x {
        for &z in rule.nodes() {
            values.push(problem.linear_exact(cfg.t_final, xj, z));
        }
    }
    Ok(ScalarOutcome {
        x,
        nodes: rule.nodes().to_vec(),
        weights: rule.weights().to_vec(),
        values,
        coefficients: None,
    })
}

fn context(cfg: &ExperimentConfig) -> String {
    format!(
        "{:?}/{:?} {:?} eps={}",
        cfg.model, cfg.method, cfg.preset, cfg.eps
    )
}

/// Runs the configured experiment and returns final-time moments.
/// Deterministic: the same configuration gives bitwise-identical output.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let bad = cfg.violations();
    if !bad.is_empty() {
        return Err(CliError::Config(bad.join("; ")));
    }
    log::info!("running {} (hash {})", context(cfg), &cfg.hash()[..12]);
    let wrap = |e| CliError::solver(context(cfg), e);
    match cfg.model {
        Model::Scalar => {
            let problem = scalar_problem(cfg)?;
            let sc = scalar_config(cfg);
            let out = match cfg.method {
                Method::Direct => scalar::solve_direct(&problem, &sc),
                Method::N1 => scalar::solve_scalar(&problem, &sc, ScalarMethod::N1),
                Method::N2 => scalar::solve_scalar(&problem, &sc, ScalarMethod::N2),
                Method::ScDirect => {
                    scalar::solve_collocation(&problem, &sc, ScalarMethod::Direct, cfg.nc)
                }
                Method::ScN1 => scalar::solve_collocation(&problem, &sc, ScalarMethod::N1, cfg.nc),
                Method::ScN2 => scalar::solve_collocation(&problem, &sc, ScalarMethod::N2, cfg.nc),
                Method::Exact => exact_linear(&problem, cfg),
            }
            .map_err(wrap)?;
            Ok(RunOutput {
                profile: Profile {
                    kind: ProfileKind::Scalar,
                    moments: out.moments(),
                },
                coefficients: out.coefficients,
            })
        }
        Model::Hopping => {
            let problem = hopping_problem(cfg)?;
            let hc = hopping_config(cfg);
            let out = match cfg.method {
                Method::Direct => hopping::solve_hopping(&problem, &hc, HoppingMethod::Direct),
                Method::N1 => hopping::solve_hopping(&problem, &hc, HoppingMethod::N1),
                Method::N2 => hopping::solve_hopping(&problem, &hc, HoppingMethod::N2),
                Method::ScDirect => {
                    hopping::solve_hopping_collocation(&problem, &hc, HoppingMethod::Direct, cfg.nc)
                }
                Method::ScN1 => {
                    hopping::solve_hopping_collocation(&problem, &hc, HoppingMethod::N1, cfg.nc)
                }
                Method::ScN2 => {
                    hopping::solve_hopping_collocation(&problem, &hc, HoppingMethod::N2, cfg.nc)
                }
                Method::Exact => {
                    return Err(CliError::Config(
                        "method exact needs the linear preset".into(),
                    ))
                }
            }
            .map_err(wrap)?;
            Ok(RunOutput {
                profile: Profile {
                    kind: ProfileKind::Hopping,
                    moments: out.moments(),
                },
                coefficients: None,
            })
        }
    }
}
