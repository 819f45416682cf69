//! Experiment configuration: TOML file plus `--set key=value` overrides,
//! resolved against per-preset defaults and validated in one pass.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Scalar,
    Hopping,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Direct stochastic Galerkin.
    Direct,
    /// Geometric-optics Galerkin in physical time.
    N1,
    /// Geometric-optics Galerkin in the phase variable.
    N2,
    /// Stochastic collocation with a deterministic inner solver.
    ScDirect,
    ScN1,
    ScN2,
    /// Analytic solution sampled at `nc` Gauss nodes (`linear` preset only).
    Exact,
}

impl Method {
    pub fn is_galerkin(self) -> bool {
        matches!(self, Method::Direct | Method::N1 | Method::N2)
    }

    pub fn is_collocation(self) -> bool {
        matches!(
            self,
            Method::ScDirect | Method::ScN1 | Method::ScN2 | Method::Exact
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Scalar nonlinear example on `[-pi/2, pi/2]`.
    Example21,
    /// Scalar linear case with an analytic solution.
    Linear,
    /// Hopping with an avoided crossing.
    Example41,
    /// Hopping with an O(1) gap.
    Example41BigGap,
    /// Coefficients from the `[custom]` section.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    Lie,
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transport {
    Spectral,
    Upwind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    CrankNicolson,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileSource {
    ForwardEuler,
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Legendre,
    Hermite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    Linf,
    L2,
}

impl Norm {
    pub fn label(self) -> &'static str {
        match self {
            Norm::Linf => "linf",
            Norm::L2 => "l2",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linf" => Ok(Norm::Linf),
            "l2" => Ok(Norm::L2),
            _ => Err(format!("unknown norm {s:?} (linf | l2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Restriction {
    All,
    Zoom,
}

/// Coefficient expressions for `preset = "custom"`. Scalar: `speed(x)`,
/// `oscillation(x, z)`, `initial_re/_im(x, z)`. Hopping: `gap(x, z)`,
/// `gap_dx(x, z)`, `coupling(x, p)`, `f_plus`, `f_minus`,
/// `f_inter_re/_im(x, p)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSpec {
    pub family: Option<Family>,
    pub domain: Option<[f64; 2]>,
    pub speed: Option<String>,
    pub oscillation: Option<String>,
    /// `zero`, `identity` or `rational-square`.
    pub nonlinearity: Option<String>,
    pub initial_re: Option<String>,
    pub initial_im: Option<String>,
    pub x_domain: Option<[f64; 2]>,
    pub p_domain: Option<[f64; 2]>,
    pub gap: Option<String>,
    pub gap_dx: Option<String>,
    pub coupling: Option<String>,
    pub f_plus: Option<String>,
    pub f_minus: Option<String>,
    pub f_inter_re: Option<String>,
    pub f_inter_im: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    method: Option<Method>,
    k: Option<usize>,
    nx: Option<usize>,
    np: Option<usize>,
    ntau: Option<usize>,
    ns: Option<usize>,
    nc: Option<usize>,
    dt: Option<f64>,
    splitting: Option<Splitting>,
    transport: Option<Transport>,
    source: Option<Source>,
    density_refine: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompare {
    norm: Option<Norm>,
    restriction: Option<Restriction>,
    zoom: Option<[f64; 2]>,
    threshold: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<Model>,
    method: Option<Method>,
    preset: Option<Preset>,
    eps: Option<f64>,
    k: Option<usize>,
    nx: Option<usize>,
    np: Option<usize>,
    ntau: Option<usize>,
    ng: Option<usize>,
    ns: Option<usize>,
    nc: Option<usize>,
    dt: Option<f64>,
    ds: Option<f64>,
    t_final: Option<f64>,
    splitting: Option<Splitting>,
    transport: Option<Transport>,
    source: Option<Source>,
    profile_source: Option<ProfileSource>,
    density_refine: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    dump_coefficients: Option<bool>,
    custom: Option<CustomSpec>,
    reference: Option<RawReference>,
    compare: Option<RawCompare>,
}

/// Resolution and method of the reference run a candidate is compared to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSpec {
    pub method: Method,
    pub k: Option<usize>,
    pub nx: usize,
    pub np: usize,
    pub ntau: usize,
    pub ns: usize,
    pub nc: usize,
    pub dt: f64,
    pub splitting: Splitting,
    pub transport: Transport,
    pub source: Source,
    pub density_refine: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSpec {
    pub norm: Norm,
    pub restriction: Restriction,
    pub zoom: Option<[f64; 2]>,
    /// Exit code 4 when any compared error exceeds this.
    pub threshold: Option<f64>,
}

impl CompareSpec {
    /// Window of `x` the comparison is restricted to, if any.
    pub fn window(&self) -> Option<(f64, f64)> {
        match self.restriction {
            Restriction::All => None,
            Restriction::Zoom => self.zoom.map(|[a, b]| (a, b)),
        }
    }
}

/// A fully resolved experiment. Counts that a method does not use are
/// still resolved (and hashed) so that every knob is visible in the echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: Model,
    pub method: Method,
    pub preset: Preset,
    pub eps: f64,
    /// gPC modes; `None` for collocation and exact methods.
    pub k: Option<usize>,
    pub nx: usize,
    /// Momentum grid size (hopping).
    pub np: usize,
    pub ntau: usize,
    /// Galerkin quadrature size; 0 selects the minimum `2P + 2`.
    pub ng: usize,
    /// Statistics nodes for Galerkin methods.
    pub ns: usize,
    /// Collocation nodes for `sc-*` and `exact`.
    pub nc: usize,
    pub dt: f64,
    /// Phase step for N2; `None` uses `dt` times the mean oscillation rate.
    pub ds: Option<f64>,
    pub t_final: f64,
    pub splitting: Splitting,
    pub transport: Transport,
    pub source: Source,
    pub profile_source: ProfileSource,
    pub density_refine: usize,
    /// Seed for randomized test vectors; the solvers are deterministic.
    pub seed: u64,
    pub custom: Option<CustomSpec>,
    pub reference: ReferenceSpec,
    pub compare: CompareSpec,
    pub out: Option<PathBuf>,
    pub dump_coefficients: bool,
}

/// The fields that determine a run's output.
#[derive(Serialize)]
struct SemanticKey<'a> {
    model: Model,
    method: Method,
    preset: Preset,
    eps: f64,
    k: Option<usize>,
    nx: usize,
    np: usize,
    ntau: usize,
    ng: usize,
    ns: usize,
    nc: usize,
    dt: f64,
    ds: Option<f64>,
    t_final: f64,
    splitting: Splitting,
    transport: Transport,
    source: Source,
    profile_source: ProfileSource,
    density_refine: usize,
    custom: &'a Option<CustomSpec>,
}

struct Defaults {
    model: Option<Model>,
    nx: usize,
    np: usize,
    dt: f64,
    t_final: f64,
    ns: usize,
    density_refine: usize,
    zoom: Option<[f64; 2]>,
    reference: ReferenceSpec,
}

fn defaults(preset: Preset) -> Defaults {
    let scalar_ref = ReferenceSpec {
        method: Method::ScDirect,
        k: None,
        nx: 2000,
        np: 32,
        ntau: 8,
        ns: 64,
        nc: 64,
        dt: 5e-5,
        splitting: Splitting::Lie,
        transport: Transport::Spectral,
        source: Source::Exact,
        density_refine: 1,
    };
    let hopping_ref = ReferenceSpec {
        method: Method::ScDirect,
        nx: 1024,
        np: 256,
        ns: 32,
        nc: 32,
        dt: 5e-3,
        splitting: Splitting::Strang,
        ..scalar_ref.clone()
    };
    match preset {
        Preset::Example21 => Defaults {
            model: Some(Model::Scalar),
            nx: 32,
            np: 32,
            dt: 0.01,
            t_final: 0.25,
            ns: 64,
            density_refine: 1,
            zoom: Some([-PI / 8.0, PI / 8.0]),
            reference: scalar_ref,
        },
        Preset::Linear => Defaults {
            model: Some(Model::Scalar),
            nx: 32,
            np: 32,
            dt: 1e-3,
            t_final: 0.1,
            ns: 64,
            density_refine: 1,
            zoom: Some([-PI / 8.0, PI / 8.0]),
            reference: ReferenceSpec {
                method: Method::Exact,
                nx: 512,
                ..scalar_ref
            },
        },
        Preset::Example41 | Preset::Example41BigGap => Defaults {
            model: Some(Model::Hopping),
            nx: 32,
            np: 32,
            dt: if preset == Preset::Example41 {
                1e-3
            } else {
                0.02
            },
            t_final: if preset == Preset::Example41 {
                0.5
            } else {
                0.3
            },
            ns: 32,
            density_refine: 8,
            zoom: Some([-PI, PI]),
            reference: hopping_ref,
        },
        Preset::Custom => Defaults {
            model: None,
            nx: 64,
            np: 64,
            dt: 1e-3,
            t_final: 0.1,
            ns: 16,
            density_refine: 1,
            zoom: None,
            reference: ReferenceSpec {
                nx: 256,
                np: 128,
                nc: 16,
                ns: 16,
                dt: 1e-4,
                ..scalar_ref
            },
        },
    }
}

/// Parses `key=value` and stores it in `table`; dotted keys address
/// sections. Values are read as TOML, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {assignment:?}: expected key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or(toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "--set {assignment:?}: empty key segment"
        )));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: {part} is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Reads `path` (if any), applies the overrides and resolves the result.
pub fn load_config(
    path: Option<&Path>,
    overrides: &[String],
) -> Result<ExperimentConfig, CliError> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    from_table(table)
}

pub fn from_toml_str(text: &str) -> Result<ExperimentConfig, CliError> {
    let table = text
        .parse::<toml::Table>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    from_table(table)
}

fn from_table(table: toml::Table) -> Result<ExperimentConfig, CliError> {
    let raw = RawConfig::deserialize(toml::Value::Table(table))
        .map_err(|e| CliError::Config(e.to_string()))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, CliError> {
    let mut bad: Vec<String> = Vec::new();
    let preset = raw.preset.unwrap_or_else(|| {
        bad.push(
            "preset is required (example21 | linear | example41 | example41-big-gap | custom)"
                .into(),
        );
        Preset::Example21
    });
    let d = defaults(preset);
    let model = match (raw.model, d.model) {
        (Some(m), Some(pm)) if m != pm => {
            bad.push(format!("model {m:?} does not match preset {preset:?}"));
            m
        }
        (Some(m), _) => m,
        (None, Some(pm)) => pm,
        (None, None) => {
            bad.push("model is required for the custom preset".into());
            Model::Scalar
        }
    };
    let method = raw.method.unwrap_or_else(|| {
        bad.push(
            "method is required (direct | n1 | n2 | sc-direct | sc-n1 | sc-n2 | exact)".into(),
        );
        Method::Direct
    });
    let eps = raw.eps.unwrap_or_else(|| {
        bad.push("eps is required".into());
        1.0
    });
    if !(eps > 0.0 && eps <= 1.0) {
        bad.push(format!("eps must lie in (0, 1], got {eps}"));
    }
    if method.is_galerkin() && raw.k.is_none() {
        bad.push(format!("k is required for method {method:?}"));
    }
    if method == Method::Exact && preset != Preset::Linear {
        bad.push("method exact is only available for the linear preset".into());
    }
    if preset == Preset::Custom && raw.custom.is_none() {
        bad.push("preset custom needs a [custom] section".into());
    }
    if preset != Preset::Custom && raw.custom.is_some() {
        bad.push("[custom] is only read with preset custom".into());
    }
    if model == Model::Scalar
        && matches!(
            method,
            Method::ScN1 | Method::ScN2 | Method::N1 | Method::N2
        )
    {
        if raw.transport == Some(Transport::Upwind) {
            bad.push("transport upwind is only supported by the direct scalar solver".into());
        }
    }
    let rr = raw.reference.unwrap_or_default();
    let dr = d.reference.clone();
    let reference = ReferenceSpec {
        method: rr.method.unwrap_or(dr.method),
        k: rr.k.or(dr.k),
        nx: rr.nx.unwrap_or(dr.nx),
        np: rr.np.unwrap_or(dr.np),
        ntau: rr.ntau.unwrap_or(dr.ntau),
        ns: rr.ns.unwrap_or(dr.ns),
        nc: rr.nc.unwrap_or(dr.nc),
        dt: rr.dt.unwrap_or(dr.dt),
        splitting: rr.splitting.unwrap_or(dr.splitting),
        transport: rr.transport.unwrap_or(dr.transport),
        source: rr.source.unwrap_or(dr.source),
        density_refine: rr.density_refine.unwrap_or(dr.density_refine),
    };
    if reference.method.is_galerkin() && reference.k.is_none() {
        bad.push(format!(
            "reference.k is required for reference method {:?}",
            reference.method
        ));
    }
    if reference.method == Method::Exact && preset != Preset::Linear {
        bad.push("reference method exact is only available for the linear preset".into());
    }
    let rc = raw.compare.unwrap_or_default();
    let compare = CompareSpec {
        norm: rc.norm.unwrap_or(Norm::Linf),
        restriction: rc.restriction.unwrap_or(Restriction::All),
        zoom: rc.zoom.or(d.zoom),
        threshold: rc.threshold,
    };
    if compare.restriction == Restriction::Zoom && compare.zoom.is_none() {
        bad.push("compare.restriction = zoom needs compare.zoom".into());
    }
    if let Some([a, b]) = compare.zoom {
        if !(b > a) {
            bad.push(format!("compare.zoom must be increasing, got [{a}, {b}]"));
        }
    }
    if let Some(t) = compare.threshold {
        if !(t >= 0.0) {
            bad.push(format!("compare.threshold must be non-negative, got {t}"));
        }
    }

    let cfg = ExperimentConfig {
        model,
        method,
        preset,
        eps,
        k: if method.is_galerkin() { raw.k } else { None },
        nx: raw.nx.unwrap_or(d.nx),
        np: raw.np.unwrap_or(d.np),
        ntau: raw.ntau.unwrap_or(8),
        ng: raw.ng.unwrap_or(0),
        ns: raw.ns.unwrap_or(d.ns),
        nc: raw.nc.unwrap_or(d.reference.nc),
        dt: raw.dt.unwrap_or(d.dt),
        ds: raw.ds,
        t_final: raw.t_final.unwrap_or(d.t_final),
        splitting: raw.splitting.unwrap_or(Splitting::Lie),
        transport: raw.transport.unwrap_or(Transport::Spectral),
        source: raw.source.unwrap_or(Source::CrankNicolson),
        profile_source: raw.profile_source.unwrap_or(ProfileSource::ForwardEuler),
        density_refine: raw.density_refine.unwrap_or(d.density_refine),
        seed: raw.seed.unwrap_or(0),
        custom: raw.custom,
        reference,
        compare,
        out: raw.out,
        dump_coefficients: raw.dump_coefficients.unwrap_or(false),
    };
    bad.extend(cfg.violations());
    if bad.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Config(format!(
            "invalid configuration:\n  - {}",
            bad.join("\n  - ")
        )))
    }
}

impl ExperimentConfig {
    /// Every violated invariant of the resolved values.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let mut counts = vec![
            ("nx", self.nx),
            ("ntau", self.ntau),
            ("ns", self.ns),
            ("nc", self.nc),
            ("density_refine", self.density_refine),
            ("reference.nx", self.reference.nx),
            ("reference.ntau", self.reference.ntau),
            ("reference.ns", self.reference.ns),
            ("reference.nc", self.reference.nc),
            ("reference.density_refine", self.reference.density_refine),
        ];
        if self.model == Model::Hopping {
            counts.push(("np", self.np));
            counts.push(("reference.np", self.reference.np));
        }
        if let Some(k) = self.k {
            counts.push(("k", k));
        }
        if let Some(k) = self.reference.k {
            counts.push(("reference.k", k));
        }
        for (name, v) in counts {
            if v == 0 {
                bad.push(format!("{name} must be positive"));
            }
        }
        for (name, v) in [("dt", self.dt), ("reference.dt", self.reference.dt)] {
            if !(v > 0.0 && v.is_finite()) {
                bad.push(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            bad.push(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            ));
        }
        if let Some(ds) = self.ds {
            if !(ds > 0.0) {
                bad.push(format!("ds must be positive, got {ds}"));
            }
            if self.method != Method::N2 && self.method != Method::ScN2 {
                bad.push("ds only applies to n2 and sc-n2".into());
            }
        }
        if let Some(c) = &self.custom {
            bad.extend(custom_violations(self.model, c));
        }
        bad
    }

    /// SHA-256 over every field that affects the solver output.
    pub fn hash(&self) -> String {
        let key = SemanticKey {
            model: self.model,
            method: self.method,
            preset: self.preset,
            eps: self.eps,
            k: self.k,
            nx: self.nx,
            np: self.np,
            ntau: self.ntau,
            ng: self.ng,
            ns: self.ns,
            nc: self.nc,
            dt: self.dt,
            ds: self.ds,
            t_final: self.t_final,
            splitting: self.splitting,
            transport: self.transport,
            source: self.source,
            profile_source: self.profile_source,
            density_refine: self.density_refine,
            custom: &self.custom,
        };
        // floats are hashed through their shortest round-trip form
        let text = toml::to_string(&key).expect("config key serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// The reference run: this experiment with the reference's method and
    /// resolution.
    pub fn reference_config(&self) -> ExperimentConfig {
        let r = &self.reference;
        ExperimentConfig {
            method: r.method,
            k: if r.method.is_galerkin() { r.k } else { None },
            nx: r.nx,
            np: r.np,
            ntau: r.ntau,
            ns: r.ns,
            nc: r.nc,
            dt: r.dt,
            ds: None,
            splitting: r.splitting,
            transport: r.transport,
            source: r.source,
            density_refine: r.density_refine,
            out: None,
            dump_coefficients: false,
            ..self.clone()
        }
    }

    /// Resolved configuration as TOML, for the run directory echo.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn custom_violations(model: Model, c: &CustomSpec) -> Vec<String> {
    let mut bad = Vec::new();
    let need = |name: &str, v: &Option<String>, bad: &mut Vec<String>| {
        if v.is_none() {
            bad.push(format!(
                "custom.{name} is required for a custom {model:?} problem"
            ));
        }
    };
    match model {
        Model::Scalar => {
            need("oscillation", &c.oscillation, &mut bad);
            need("initial_re", &c.initial_re, &mut bad);
            if let Some(n) = &c.nonlinearity {
                if !matches!(n.as_str(), "zero" | "identity" | "rational-square") {
                    bad.push(format!(
                        "custom.nonlinearity {n:?} (zero | identity | rational-square)"
                    ));
                }
            }
            for (name, dom) in [("domain", c.domain)] {
                if let Some([a, b]) = dom {
                    if !(b > a) {
                        bad.push(format!("custom.{name} must be increasing"));
                    }
                }
            }
        }
        Model::Hopping => {
            for (name, v) in [
                ("gap", &c.gap),
                ("gap_dx", &c.gap_dx),
                ("coupling", &c.coupling),
                ("f_plus", &c.f_plus),
                ("f_minus", &c.f_minus),
            ] {
                need(name, v, &mut bad);
            }
            for (name, dom) in [("x_domain", c.x_domain), ("p_domain", c.p_domain)] {
                if let Some([a, b]) = dom {
                    if !(b > a) {
                        bad.push(format!("custom.{name} must be increasing"));
                    }
                }
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example21_defaults_echo_the_figure_parameters() {
        let cfg =
            from_toml_str("preset = \"example21\"\neps = 0.01\nmethod = \"n2\"\nk = 4\n").unwrap();
        assert_eq!(cfg.model, Model::Scalar);
        assert_eq!(cfg.k, Some(4));
        // dx = pi / 32 on an interval of length pi
        assert_eq!(cfg.nx, 32);
        assert_eq!(cfg.dt, 0.01);
        assert_eq!(cfg.t_final, 0.25);
    }

    #[test]
    fn zero_eps_is_rejected() {
        let err = from_toml_str("preset = \"example21\"\neps = 0.0\nmethod = \"n2\"\nk = 4\n")
            .unwrap_err();
        assert!(err.to_string().contains("eps"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_k_names_the_field() {
        let err =
            from_toml_str("preset = \"example21\"\neps = 0.1\nmethod = \"direct\"\n").unwrap_err();
        assert!(err.to_string().contains("k is required"), "{err}");
        // collocation does not need it
        assert!(
            from_toml_str("preset = \"example21\"\neps = 0.1\nmethod = \"sc-direct\"\n").is_ok()
        );
    }

    #[test]
    fn all_violations_are_listed() {
        let err = from_toml_str(
            "preset = \"example41\"\neps = 2.0\nmethod = \"n1\"\nnx = 0\ndt = -1.0\n",
        )
        .unwrap_err();
        let msg = err.to_string();
        for needle in [
            "eps must lie",
            "k is required",
            "nx must be positive",
            "dt must be positive",
        ] {
            assert!(msg.contains(needle), "{needle} missing from {msg}");
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err =
            from_toml_str("preset = \"example21\"\neps = 0.1\nmethod = \"n2\"\nk = 4\nnxx = 3\n")
                .unwrap_err();
        assert!(err.to_string().contains("nxx"), "{err}");
        let err = from_toml_str(
            "preset = \"example21\"\neps = 0.1\nmethod = \"n2\"\nk = 4\n[reference]\nfoo = 1\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("foo"), "{err}");
    }

    #[test]
    fn overrides_win_and_reach_sections() {
        let mut t: toml::Table = "preset = \"example41\"\neps = 0.5\nmethod = \"n2\"\nk = 3\n"
            .parse()
            .unwrap();
        apply_override(&mut t, "k=5").unwrap();
        apply_override(&mut t, "reference.nx = 64").unwrap();
        apply_override(&mut t, "splitting=strang").unwrap();
        let cfg = from_table(t).unwrap();
        assert_eq!(cfg.k, Some(5));
        assert_eq!(cfg.reference.nx, 64);
        assert_eq!(cfg.splitting, Splitting::Strang);
        assert!(apply_override(&mut toml::Table::new(), "novalue").is_err());
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let base =
            from_toml_str("preset = \"example41\"\neps = 0.5\nmethod = \"n2\"\nk = 3\n").unwrap();
        let mut other = base.clone();
        other.out = Some("/tmp/x".into());
        other.compare.threshold = Some(1.0);
        assert_eq!(base.hash(), other.hash());
        other.dt *= 0.5;
        assert_ne!(base.hash(), other.hash());
        // the reference of a dt-variant is the same run
        assert_eq!(
            base.reference_config().hash(),
            other.reference_config().hash()
        );
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let cfg =
            from_toml_str("preset = \"linear\"\neps = 0.1\nmethod = \"n1\"\nk = 3\n").unwrap();
        let back: ExperimentConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
