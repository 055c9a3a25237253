//! Recovery success probabilities over a grid of `(m, q, se0)` cells.

use std::path::PathBuf;
use std::time::Instant;

use pst_core::metrics::subspace_error;
use pst_core::model::{
    generate_subspace, perturb_subspace, rotate_one_direction, seeded_rng, Episode,
};
use pst_core::pstpca::{run_pst_pca, PstPcaOptions};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{ensure_dir, fmt_float, write_csv, write_metadata, Metadata, VERSION};
use crate::{clock, run_indexed};

pub const CSV_NAME: &str = "success_table.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessRow {
    pub m: usize,
    pub q: usize,
    pub se0: f64,
    pub successes: usize,
    pub runs: usize,
    /// Runs that ended in an error; each counts as a failure.
    pub failures_by_error: usize,
    pub success_prob: f64,
}

#[derive(Debug, Clone)]
pub struct ResultTable {
    pub rows: Vec<SuccessRow>,
    pub csv_file: PathBuf,
    pub metadata_file: PathBuf,
}

impl ResultTable {
    pub fn cell(&self, m: usize, q: usize, se0: f64) -> Option<&SuccessRow> {
        self.rows
            .iter()
            .find(|row| row.m == m && row.q == q && row.se0 == se0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Success,
    Failure,
    Error,
}

/// One Monte-Carlo run. Success means the final subspace error is below
/// `success_factor` times the measured error of the prior estimate; the
/// iterations stop as soon as that holds or the basis stops moving.
fn run_cell(
    config: &ExperimentConfig,
    m: usize,
    q: usize,
    se0: f64,
    seed: u64,
) -> pst_core::Result<bool> {
    let (n, r) = (config.n, config.r);
    let u0 = generate_subspace(n, r, &mut seeded_rng(seed, 0))?;
    let prior = perturb_subspace(&u0, se0, &mut seeded_rng(seed, 1))?;
    let (u1, _) = rotate_one_direction(
        &u0,
        config.theta().to_radians(),
        r - 1,
        &mut seeded_rng(seed, 2),
    )?;
    let episode = Episode::generate(u1, q, m, &config.lambda(), &mut seeded_rng(seed, 3))?;
    let target = config.success_factor * subspace_error(&prior, &u0)?;
    let opts = PstPcaOptions {
        t_max: config.t_max_pstpca,
        delta_tol: config.delta_tol,
        stop_below_se: Some(target),
    };
    let result = run_pst_pca(&episode.measurements, &prior, &opts, Some(episode.truth()))?;
    Ok(result.final_se().is_some_and(|se| se < target))
}

pub fn run_success_table(config: &ExperimentConfig, threads: usize) -> Result<ResultTable> {
    config.validate()?;
    let started = Instant::now();
    let mut cells = Vec::new();
    for &se0 in &config.se0_list() {
        for &q in &config.q_list() {
            for &m in &config.m_list() {
                cells.push((m, q, se0));
            }
        }
    }
    let runs = config.runs;
    let outcomes = run_indexed(cells.len() * runs, threads, |job| {
        let (m, q, se0) = cells[job / runs];
        match run_cell(config, m, q, se0, config.seed + (job % runs) as u64) {
            Ok(true) => Outcome::Success,
            Ok(false) => Outcome::Failure,
            Err(_) => Outcome::Error,
        }
    })?;

    let rows: Vec<SuccessRow> = cells
        .iter()
        .zip(outcomes.chunks(runs))
        .map(|(&(m, q, se0), chunk)| {
            let successes = chunk.iter().filter(|o| **o == Outcome::Success).count();
            SuccessRow {
                m,
                q,
                se0,
                successes,
                runs,
                failures_by_error: chunk.iter().filter(|o| **o == Outcome::Error).count(),
                success_prob: successes as f64 / runs as f64,
            }
        })
        .collect();

    let dir = &config.output_dir;
    ensure_dir(dir)?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            vec![
                row.m.to_string(),
                row.q.to_string(),
                fmt_float(row.se0),
                fmt_float(row.success_prob),
                row.runs.to_string(),
                row.failures_by_error.to_string(),
            ]
        })
        .collect();
    let csv_file = write_csv(
        &dir.join(CSV_NAME),
        &["m", "q", "se0", "success_prob", "runs", "failures_by_error"],
        &csv_rows,
    )?;
    let metadata_file = write_metadata(
        dir,
        "success_metadata.json",
        &Metadata {
            version: VERSION,
            experiment: "success-table",
            config,
            wall_clock_seconds: clock(config.timing, started),
            results: &rows,
        },
    )?;
    Ok(ResultTable {
        rows,
        csv_file,
        metadata_file,
    })
}
