//! CSV and JSON writers. Floats carry 17 significant digits so every file
//! parses back to the exact values it was written from.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{ExperimentError, Result};

pub const VERSION: &str = concat!("pst-experiments ", env!("CARGO_PKG_VERSION"));

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Output {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Writes a header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

/// Parses a CSV into its header and string rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_owned).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

/// Re-serializes a parsed CSV with every float reformatted from its parsed value.
pub fn reserialize(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|cell| {
                if cell.contains(['e', '.']) {
                    cell.parse::<f64>()
                        .map(fmt_float)
                        .unwrap_or_else(|_| cell.clone())
                } else {
                    cell.clone()
                }
            })
            .collect();
        w.write_record(&cells)?;
    }
    Ok(w.into_inner()
        .map_err(|e| csv::Error::from(e.into_error()))?)
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a, T: Serialize> {
    pub version: &'static str,
    pub experiment: &'a str,
    pub config: &'a ExperimentConfig,
    pub wall_clock_seconds: f64,
    pub results: T,
}

pub fn write_metadata<T: Serialize>(
    dir: &Path,
    name: &str,
    meta: &Metadata<'_, T>,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(meta).expect("metadata serializes");
    std::fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(path)
}
