//! Error-versus-time traces of warm-started tracking, full alternating
//! minimization and per-column Wirtinger flow on the same data.

use std::path::PathBuf;
use std::time::Instant;

use pst_core::baselines::{lrpr_altmin, wf_columns, BaselineConfig};
use pst_core::model::{
    generate_subspace, perturb_subspace, rotate_one_direction, seeded_rng, Episode,
};
use pst_core::pstpca::{refine_with_lrpr, run_pst_pca, PstPcaOptions, TraceEntry};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{ensure_dir, fmt_float, fmt_opt, write_csv, write_metadata, Metadata, VERSION};
use crate::{clock, run_indexed};

pub const ALGORITHMS: [&str; 3] = ["pstpca_refine", "lrpr_altmin", "wf"];
pub const AVERAGING: &str = "mean over runs at each iteration";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub algorithm: &'static str,
    pub iteration: usize,
    pub seconds_mean: f64,
    pub norm_err_mean: f64,
    pub se_mean: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrackSummary {
    pub algorithm: &'static str,
    pub final_norm_err_mean: f64,
    pub final_norm_err_per_run: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonSummary {
    pub averaging: &'static str,
    pub tracks: Vec<TrackSummary>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// One averaged trace per entry of [`ALGORITHMS`].
    pub traces: Vec<Vec<TraceRow>>,
    pub summary: ComparisonSummary,
    pub csv_files: Vec<PathBuf>,
    pub metadata_file: PathBuf,
}

impl ComparisonReport {
    pub fn final_norm_err(&self, algorithm: &str) -> Option<f64> {
        self.summary
            .tracks
            .iter()
            .find(|t| t.algorithm == algorithm)
            .map(|t| t.final_norm_err_mean)
    }
}

pub fn csv_name(algorithm: &str) -> String {
    format!("trace_{algorithm}.csv")
}

/// Repeats the last entry until the trace has `len` entries, so runs that
/// stopped early average against the value they stopped at.
fn pad(trace: &mut Vec<TraceEntry>, len: usize) {
    while trace.len() < len {
        let mut last = *trace.last().expect("traces start with the initial point");
        last.iteration += 1;
        trace.push(last);
    }
}

fn run_once(config: &ExperimentConfig, seed: u64) -> pst_core::Result<[Vec<TraceEntry>; 3]> {
    let (n, r) = (config.n, config.r);
    let u0 = generate_subspace(n, r, &mut seeded_rng(seed, 0))?;
    let prior = perturb_subspace(&u0, config.se0_target, &mut seeded_rng(seed, 1))?;
    let (u1, _) = rotate_one_direction(
        &u0,
        config.theta().to_radians(),
        r - 1,
        &mut seeded_rng(seed, 2),
    )?;
    let episode = Episode::generate(
        u1,
        config.q,
        config.m,
        &config.lambda(),
        &mut seeded_rng(seed, 3),
    )?;
    let meas = &episode.measurements;

    let opts = PstPcaOptions {
        t_max: config.t_max_pstpca,
        delta_tol: config.delta_tol,
        stop_below_se: None,
    };
    let pst = run_pst_pca(meas, &prior, &opts, Some(episode.truth()))?;
    let mut tracked = pst.trace.clone();
    pad(&mut tracked, config.t_max_pstpca + 1);
    if config.lrpr_refine_iters > 0 {
        let offset = tracked.last().map_or(0.0, |e| e.seconds);
        let refined =
            refine_with_lrpr(&pst, meas, config.lrpr_refine_iters, Some(episode.truth()))?;
        tracked.extend(refined.trace.into_iter().skip(1).map(|mut e| {
            e.iteration += config.t_max_pstpca;
            e.seconds += offset;
            e
        }));
    }

    let lrpr_config = BaselineConfig {
        max_iters: config.lrpr_iters,
        ..BaselineConfig::default()
    };
    let mut lrpr = lrpr_altmin(meas, r, &lrpr_config, Some(episode.truth()))?.trace;
    pad(&mut lrpr, config.lrpr_iters + 1);

    let wf_config = BaselineConfig {
        max_iters: config.wf_iters,
        step_size: config.wf_step,
        ..BaselineConfig::default()
    };
    let wf = wf_columns(meas, &wf_config, Some(&episode.signals))?.trace;

    Ok([tracked, lrpr, wf])
}

fn average(algorithm: &'static str, traces: &[&Vec<TraceEntry>], timing: bool) -> Vec<TraceRow> {
    let runs = traces.len() as f64;
    (0..traces[0].len())
        .map(|k| {
            let entries: Vec<&TraceEntry> = traces.iter().map(|t| &t[k]).collect();
            let se: Option<f64> = entries.iter().map(|e| e.se).sum();
            TraceRow {
                algorithm,
                iteration: entries[0].iteration,
                seconds_mean: if timing {
                    entries.iter().map(|e| e.seconds).sum::<f64>() / runs
                } else {
                    0.0
                },
                norm_err_mean: entries
                    .iter()
                    .map(|e| e.norm_err.unwrap_or(f64::NAN))
                    .sum::<f64>()
                    / runs,
                se_mean: se.map(|s| s / runs),
            }
        })
        .collect()
}

pub fn run_comparison(config: &ExperimentConfig, threads: usize) -> Result<ComparisonReport> {
    config.validate()?;
    let started = Instant::now();
    let per_run = run_indexed(config.runs, threads, |k| {
        run_once(config, config.seed + k as u64)
    })?
    .into_iter()
    .collect::<std::result::Result<Vec<_>, _>>()?;

    let mut traces = Vec::new();
    let mut tracks = Vec::new();
    for (a, &algorithm) in ALGORITHMS.iter().enumerate() {
        let runs: Vec<&Vec<TraceEntry>> = per_run.iter().map(|r| &r[a]).collect();
        let averaged = average(algorithm, &runs, config.timing);
        tracks.push(TrackSummary {
            algorithm,
            final_norm_err_mean: averaged.last().map_or(f64::NAN, |row| row.norm_err_mean),
            final_norm_err_per_run: runs
                .iter()
                .map(|t| t.last().and_then(|e| e.norm_err).unwrap_or(f64::NAN))
                .collect(),
        });
        traces.push(averaged);
    }

    let dir = &config.output_dir;
    ensure_dir(dir)?;
    let mut csv_files = Vec::new();
    for trace in &traces {
        let rows: Vec<Vec<String>> = trace
            .iter()
            .map(|row| {
                vec![
                    row.algorithm.to_string(),
                    row.iteration.to_string(),
                    fmt_float(row.seconds_mean),
                    fmt_float(row.norm_err_mean),
                    fmt_opt(row.se_mean),
                ]
            })
            .collect();
        let path = dir.join(csv_name(trace[0].algorithm));
        csv_files.push(write_csv(
            &path,
            &[
                "algorithm",
                "iteration",
                "seconds_mean",
                "norm_err_mean",
                "se_mean",
            ],
            &rows,
        )?);
    }
    let summary = ComparisonSummary {
        averaging: AVERAGING,
        tracks,
    };
    let metadata_file = write_metadata(
        dir,
        "compare_metadata.json",
        &Metadata {
            version: VERSION,
            experiment: "compare",
            config,
            wall_clock_seconds: clock(config.timing, started),
            results: &summary,
        },
    )?;
    Ok(ComparisonReport {
        traces,
        summary,
        csv_files,
        metadata_file,
    })
}
