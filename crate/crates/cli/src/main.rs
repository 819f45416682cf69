use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use oscgpc_cli::{
    check_threshold, compare_profiles, config, convergence_sweep, csvio, init_threads, load_config,
    run_command, sweep, CliError, Norm, ReferenceCache, SweepParam,
};

const CONFIG_HELP: &str = "\
CONFIG KEYS (TOML; `--set key=value` overrides, dotted keys reach sections)
  preset            example21 | linear | example41 | example41-big-gap | custom   (required)
  method            direct | n1 | n2 | sc-direct | sc-n1 | sc-n2 | exact (linear only)   (required)
  eps               in (0, 1]   (required)
  model             scalar | hopping (implied by the preset; required for custom)
  k                 gPC modes (required for direct, n1, n2)
  nx, np, ntau      grid sizes; ntau = 8
  ng                Galerkin quadrature size; 0 = minimum 2P + 2   (0)
  ns                statistics nodes of Galerkin methods
  nc                collocation nodes of sc-* and exact
  dt, t_final       time step (adjusted to divide t_final) and final time
  ds                phase step of n2 (default dt * mean rate, capped by a CFL bound)
  splitting         lie | strang   (lie)
  transport         spectral | upwind   (spectral; upwind: direct scalar only)
  source            crank-nicolson | exact   (hopping direct; crank-nicolson)
  profile_source    forward-euler | midpoint   (hopping n2; forward-euler)
  density_refine    momentum refinement of hopping n1/n2 densities
  seed              seed for randomized test vectors (0); solvers are deterministic
  dump_coefficients write coefficients.csv when the solver has them (false)
  [custom]          expressions in x, z (scalar; hopping gap) or x, p (hopping data):
                    scalar: speed oscillation initial_re initial_im nonlinearity domain family
                    hopping: gap gap_dx coupling f_plus f_minus f_inter_re f_inter_im
                             x_domain p_domain family
  [reference]       method k nx np ntau ns nc dt splitting transport source density_refine
  [compare]         norm = linf | l2; restriction = all | zoom; zoom = [lo, hi]; threshold

PRESET DEFAULTS
  example21          nx 32, dt 0.01, t_final 0.25, ns 64; zoom [-pi/8, pi/8]
                     reference sc-direct nc 64, nx 2000, dt 5e-5
  linear             nx 32, dt 1e-3, t_final 0.1, ns 64; zoom [-pi/8, pi/8]
                     reference exact nc 64, nx 512
  example41          nx 32, np 32, dt 1e-3, t_final 0.5, ns 32, density_refine 8; zoom [-pi, pi]
                     reference sc-direct nc 32, nx 1024, np 256, dt 5e-3, strang, exact source
  example41-big-gap  as example41 with dt 0.02, t_final 0.3
  custom             nx 64, np 64, dt 1e-3, t_final 0.1, ns 16
                     reference sc-direct nc 16, nx 256, np 128, dt 1e-4

ENVIRONMENT
  OSCGPC_THREADS     worker threads (default: all cores)
  RUST_LOG           log level (e.g. info)

EXIT CODES
  0 success, 1 I/O or input error, 2 config error, 3 solver error,
  4 comparison threshold exceeded";

#[derive(Parser)]
#[command(
    name = "oscgpc",
    version,
    about = "gPC solvers for oscillatory transport with random coefficients"
)]
#[command(after_long_help = CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write per-observable CSVs.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config key, e.g. `--set k=6` or `--set reference.nx=512`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (default: `out` from the config, else `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run (or load) the reference and write errors.csv.
        #[arg(long)]
        reference: bool,
        /// Reference cache directory (default `<out>/cache`).
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Run an experiment per parameter value against a fixed reference.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// dt | dx | k | eps
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values (at least 3).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Compare two profile CSVs (files or run directories) at shared grid points.
    Compare {
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, default_value = "linf")]
        norm: Norm,
        /// Restrict to `lo,hi`.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        zoom: Option<Vec<f64>>,
        /// Exit with code 4 when any error exceeds this.
        #[arg(long)]
        threshold: Option<f64>,
        /// Also write the error table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(cli: Option<PathBuf>, cfg: &config::ExperimentConfig) -> PathBuf {
    cli.or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Run {
            config,
            set,
            out,
            reference,
            cache,
        } => {
            let cfg = load_config(config.as_deref(), &set)?;
            let out = out_dir(out, &cfg);
            let cache = ReferenceCache::new(cache.unwrap_or_else(|| out.join("cache")));
            let summary = run_command(&cfg, &out, reference.then_some(&cache))?;
            for f in &summary.files {
                println!("{}", f.display());
            }
            if let Some(r) = &summary.report {
                for row in &r.rows {
                    println!("{}\t{}\t{:.3e}", row.key(), row.norm.label(), row.error);
                }
            }
        }
        Command::Sweep {
            config,
            set,
            param,
            values,
            out,
            cache,
        } => {
            let cfg = load_config(config.as_deref(), &set)?;
            let out = out_dir(out, &cfg);
            let cache = ReferenceCache::new(cache.unwrap_or_else(|| out.join("cache")));
            let rows = convergence_sweep(&cfg, param, &values, &cache, Some(&out))?;
            println!("{}", sweep::SWEEP_HEADER.join(","));
            for r in sweep::sweep_rows_csv(&rows) {
                println!("{}", r.join(","));
            }
        }
        Command::Compare {
            candidate,
            reference,
            norm,
            zoom,
            threshold,
            out,
        } => {
            let a = csvio::read_profile(&candidate)?;
            let b = csvio::read_profile(&reference)?;
            let window = zoom.map(|z| (z[0], z[1]));
            let report = compare_profiles(&a, &b, norm, window)?;
            println!("{}", oscgpc_cli::ErrorReport::HEADER.join(","));
            for r in report.table_rows() {
                println!("{}", r.join(","));
            }
            if let Some(p) = out {
                csvio::write_table(&p, &oscgpc_cli::ErrorReport::HEADER, &report.table_rows())?;
            }
            check_threshold(&report, threshold)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oscgpc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
