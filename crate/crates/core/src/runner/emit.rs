//! Writes a [`RunReport`] as CSV tables, a JSON summary and plot data.
//!
//! `entropy.csv` has one row per `(n, ε)` cell with the columns
//! [`ENTROPY_COLUMNS`]; `fits.csv` has one row per ε with [`FIT_COLUMNS`].
//! Plot files hold `n` and the logarithm of the count in the run's base.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{Cell, FitRow, RunReport};

pub const ENTROPY_COLUMNS: [&str; 10] =
    ["estimator", "method", "n", "epsilon", "count", "log2_count", "ln_count", "evaluations", "universe_size", "table"];

pub const FIT_COLUMNS: [&str; 11] =
    ["estimator", "method", "epsilon", "log_base", "n_min", "n_max", "slope", "ci_low", "ci_high", "limsup_surrogate", "points"];

fn label<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cell_record(c: &Cell, table: &str) -> Vec<String> {
    vec![
        label(&c.estimator),
        c.method.map(|m| m.label().to_string()).unwrap_or_default(),
        c.n.to_string(),
        c.eps.to_string(),
        c.count.to_string(),
        c.log2_count.to_string(),
        c.ln_count.to_string(),
        opt(c.evaluations),
        opt(c.universe_size),
        table.to_string(),
    ]
}

fn fit_record(f: &FitRow) -> Vec<String> {
    vec![
        label(&f.estimator),
        f.method.map(|m| m.label().to_string()).unwrap_or_default(),
        f.eps.to_string(),
        f.fit.base.label().to_string(),
        f.n_min.to_string(),
        f.n_max.to_string(),
        f.fit.slope.to_string(),
        f.fit.ci_low.to_string(),
        f.fit.ci_high.to_string(),
        f.fit.limsup_surrogate.to_string(),
        f.fit.points.to_string(),
    ]
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn entropy_table(report: &RunReport, path: &Path) -> Result<()> {
    let rows = report
        .cells
        .iter()
        .map(|c| cell_record(c, "sweep"))
        .chain(report.exact_check.iter().map(|c| cell_record(c, "exact_check")));
    write_csv(path, &ENTROPY_COLUMNS, rows)
}

pub fn fit_table(report: &RunReport, path: &Path) -> Result<()> {
    write_csv(path, &FIT_COLUMNS, report.fits.iter().map(fit_record))
}

pub fn summary_json(report: &RunReport, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// One two-column file per ε, plus the volume bound when present.
pub fn plot_files(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let base = report.settings.log_base;
    let mut out = Vec::new();
    for &eps in &report.settings.eps_list {
        let path = dir.join(format!("plot_eps{eps}.dat"));
        let mut f = fs::File::create(&path)?;
        writeln!(f, "# n log{}(count) eps={eps}", base.label())?;
        for c in report.cells.iter().filter(|c| c.eps == eps) {
            writeln!(f, "{} {}", c.n, base.log(c.count as f64))?;
        }
        out.push(path);
    }
    if let Some(lb) = &report.quotient.lower_bound {
        let path = dir.join("plot_lower_bound.dat");
        let mut f = fs::File::create(&path)?;
        writeln!(f, "# n log{}(lower bound)", base.label())?;
        for (n, v) in &lb.values {
            writeln!(f, "{n} {v}")?;
        }
        out.push(path);
    }
    Ok(out)
}

/// Writes every output file into `dir` (created if missing).
pub fn emit(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![dir.join("entropy.csv"), dir.join("fits.csv"), dir.join("summary.json")];
    entropy_table(report, &files[0])?;
    fit_table(report, &files[1])?;
    summary_json(report, &files[2])?;
    files.extend(plot_files(report, dir)?);
    Ok(files)
}
