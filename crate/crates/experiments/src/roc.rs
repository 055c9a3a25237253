//! Detection ROC curves over a sweep of rotation angles.

use std::path::PathBuf;
use std::time::Instant;

use pst_core::detection::{
    roc_auc, roc_from_statistics, simulate_statistic, DetectionScenario, RocPoint,
};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::output::{ensure_dir, fmt_float, write_csv, write_metadata, Metadata, VERSION};
use crate::{clock, run_indexed};

#[derive(Debug, Clone, Serialize)]
pub struct RocCurve {
    pub theta_degrees: f64,
    pub auc: f64,
    pub changed_statistics: Vec<f64>,
    #[serde(skip)]
    pub points: Vec<RocPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RocSummary {
    pub unchanged_statistics: Vec<f64>,
    pub curves: Vec<RocCurve>,
}

#[derive(Debug, Clone)]
pub struct RocReport {
    pub summary: RocSummary,
    pub csv_files: Vec<PathBuf>,
    pub metadata_file: PathBuf,
}

impl RocReport {
    pub fn auc(&self, theta_degrees: f64) -> Option<f64> {
        self.summary
            .curves
            .iter()
            .find(|c| c.theta_degrees == theta_degrees)
            .map(|c| c.auc)
    }
}

pub fn csv_name(theta_degrees: f64) -> String {
    format!("roc_theta{theta_degrees}.csv")
}

/// For every run, one unchanged dataset and one changed dataset per angle.
/// All of a run's datasets share the subspace and prior estimate, so the
/// unchanged statistics serve every angle.
pub fn run_roc_experiment(config: &ExperimentConfig, threads: usize) -> Result<RocReport> {
    config.validate()?;
    let started = Instant::now();
    let grid = config.thresholds()?;
    let scenario = |theta: Option<f64>| DetectionScenario {
        n: config.n,
        r: config.r,
        m: config.m,
        q: config.q,
        theta: theta.map(f64::to_radians),
        se0: config.se0_target,
        lambda_bar: config.lambda(),
        chg_index: config.r - 1,
    };
    let mut scenarios = vec![scenario(None)];
    scenarios.extend(config.theta_degrees.iter().map(|&t| scenario(Some(t))));

    let per_run = scenarios.len();
    let stats = run_indexed(config.runs * per_run, threads, |job| {
        let (run, which) = (job / per_run, job % per_run);
        simulate_statistic(&scenarios[which], config.seed + run as u64)
    })?
    .into_iter()
    .collect::<std::result::Result<Vec<f64>, _>>()?;
    let column = |which: usize| -> Vec<f64> {
        (0..config.runs)
            .map(|run| stats[run * per_run + which])
            .collect()
    };

    let unchanged = column(0);
    let mut curves = Vec::new();
    for (k, &theta) in config.theta_degrees.iter().enumerate() {
        let changed = column(k + 1);
        let points = roc_from_statistics(&changed, &unchanged, &grid)?;
        curves.push(RocCurve {
            theta_degrees: theta,
            auc: roc_auc(&points),
            changed_statistics: changed,
            points,
        });
    }

    let dir = &config.output_dir;
    ensure_dir(dir)?;
    let mut csv_files = Vec::new();
    for curve in &curves {
        let rows: Vec<Vec<String>> = curve
            .points
            .iter()
            .map(|p| {
                vec![
                    fmt_float(p.c),
                    fmt_float(p.false_positive_rate),
                    fmt_float(p.true_positive_rate),
                ]
            })
            .collect();
        csv_files.push(write_csv(
            &dir.join(csv_name(curve.theta_degrees)),
            &["c", "fpr", "tpr"],
            &rows,
        )?);
    }
    let summary = RocSummary {
        unchanged_statistics: unchanged,
        curves,
    };
    let metadata_file = write_metadata(
        dir,
        "roc_metadata.json",
        &Metadata {
            version: VERSION,
            experiment: "roc",
            config,
            wall_clock_seconds: clock(config.timing, started),
            results: &summary,
        },
    )?;
    Ok(RocReport {
        summary,
        csv_files,
        metadata_file,
    })
}
