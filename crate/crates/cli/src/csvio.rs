//! CSV output (17 significant digits, atomic replace) and profile input.
//!
//! Scalar profile: `x,mean_re,mean_im,sd_re,sd_im`.
//! Hopping profile, one file per observable: `x,mean,sd`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use oscgpc_core::{MomentProfile, Observable, Statistic};

use crate::error::CliError;
use crate::experiment::{Profile, ProfileKind};

/// Shortest fixed-width form that round-trips an `f64` exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to a temporary file beside `path` and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Header plus rows; cells are written verbatim.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    write_atomic(path, &s)
}

fn header(kind: ProfileKind) -> Vec<&'static str> {
    let mut h = vec!["x"];
    h.extend(kind.statistics().iter().map(|&s| kind.label(s)));
    h
}

/// CSV text of one observable.
pub fn observable_csv(kind: ProfileKind, x: &[f64], obs: &Observable) -> String {
    let mut s = header(kind).join(",");
    s.push('\n');
    for (j, &xj) in x.iter().enumerate() {
        s.push_str(&fmt_f64(xj));
        for &stat in kind.statistics() {
            let _ = write!(s, ",{}", fmt_f64(obs.column(stat)[j]));
        }
        s.push('\n');
    }
    s
}

/// One `<observable>.csv` per observable in `dir`; returns the paths.
pub fn write_profile(dir: &Path, profile: &Profile) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::new();
    for obs in &profile.moments.observables {
        let path = dir.join(format!("{}.csv", obs.name));
        write_atomic(
            &path,
            &observable_csv(profile.kind, &profile.moments.x, obs),
        )?;
        paths.push(path);
    }
    Ok(paths)
}

/// `x,k,re,im` rows of gPC coefficients `coeffs[j * K + k]`.
pub fn write_coefficients(
    path: &Path,
    x: &[f64],
    k: usize,
    coeffs: &[oscgpc_core::Complex64],
) -> Result<(), CliError> {
    let mut s = String::from("x,k,re,im\n");
    for (j, &xj) in x.iter().enumerate() {
        for m in 0..k {
            let c = coeffs[j * k + m];
            let _ = writeln!(s, "{},{m},{},{}", fmt_f64(xj), fmt_f64(c.re), fmt_f64(c.im));
        }
    }
    write_atomic(path, &s)
}

fn read_observable(path: &Path) -> Result<(ProfileKind, Vec<f64>, Observable), CliError> {
    let bad = |msg: String| CliError::Csv {
        path: path.to_path_buf(),
        msg,
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| bad("empty file".into()))?.trim();
    let kind = if head == header(ProfileKind::Scalar).join(",") {
        ProfileKind::Scalar
    } else if head == header(ProfileKind::Hopping).join(",") {
        ProfileKind::Hopping
    } else {
        return Err(bad(format!("unrecognised header {head:?}")));
    };
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| bad("file name is not an observable name".into()))?
        .to_string();
    let stats = kind.statistics();
    let mut x = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); stats.len()];
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != stats.len() + 1 {
            return Err(bad(format!(
                "line {}: expected {} cells",
                n + 2,
                stats.len() + 1
            )));
        }
        let parse = |c: &str| {
            c.trim()
                .parse::<f64>()
                .map_err(|e| bad(format!("line {}: {e}", n + 2)))
        };
        x.push(parse(cells[0])?);
        for (col, c) in cols.iter_mut().zip(&cells[1..]) {
            col.push(parse(c)?);
        }
    }
    let mut obs = Observable::new(name, x.len());
    for (stat, col) in stats.iter().zip(cols) {
        match stat {
            Statistic::MeanRe => obs.mean_re = col,
            Statistic::MeanIm => obs.mean_im = col,
            Statistic::SdRe => obs.sd_re = col,
            Statistic::SdIm => obs.sd_im = col,
        }
    }
    Ok((kind, x, obs))
}

/// Reads a single observable file, or every `*.csv` profile file in a
/// directory (files with other headers are skipped).
pub fn read_profile(path: &Path) -> Result<Profile, CliError> {
    let files: Vec<PathBuf> = if path.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        v.sort();
        v
    } else {
        vec![path.to_path_buf()]
    };
    let mut kind = None;
    let mut grid: Option<Vec<f64>> = None;
    let mut observables = Vec::new();
    for f in &files {
        let (k, x, obs) = match read_observable(f) {
            Ok(v) => v,
            Err(CliError::Csv { .. }) if path.is_dir() => continue,
            Err(e) => return Err(e),
        };
        if kind.is_some_and(|kk| kk != k) {
            return Err(CliError::Csv {
                path: f.clone(),
                msg: "mixes scalar and hopping schemas".into(),
            });
        }
        if grid.as_ref().is_some_and(|g| *g != x) {
            return Err(CliError::Csv {
                path: f.clone(),
                msg: "grid differs from the other observables".into(),
            });
        }
        kind = Some(k);
        grid = Some(x);
        observables.push(obs);
    }
    let kind = kind.ok_or_else(|| CliError::Csv {
        path: path.to_path_buf(),
        msg: "no profile CSV found".into(),
    })?;
    Ok(Profile {
        kind,
        moments: MomentProfile {
            x: grid.unwrap_or_default(),
            observables,
        },
    })
}
