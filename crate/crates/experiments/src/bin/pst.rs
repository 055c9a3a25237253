use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pst_experiments::config::{ExperimentConfig, DEMO, DESK_COMPARE, DESK_ROC, DESK_SUCCESS};
use pst_experiments::demo::run_demo;
use pst_experiments::{run_comparison, run_roc_experiment, run_success_table, Result};

/// Phaseless subspace tracking experiments.
#[derive(Debug, Parser)]
#[command(name = "pst", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detection ROC curves, one CSV per rotation angle.
    Roc(Common),
    /// Recovery success probabilities over (m, q, se0) cells.
    SuccessTable(Common),
    /// Error-versus-time traces of the three recovery algorithms.
    Compare(Common),
    /// Small end-to-end run: detection verdict and final subspace error.
    Demo(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment config; a built-in desk-scale config is used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "PST_THREADS", default_value_t = 0)]
    threads: usize,
}

impl Common {
    fn config(&self, builtin: &str) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::from_json(builtin)?,
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(runs) = self.runs {
            config.runs = runs;
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        config.validate()?;
        println!("config:\n{}", config.to_json());
        Ok(config)
    }
}

fn print_outputs<'a>(paths: impl IntoIterator<Item = &'a PathBuf>) {
    for path in paths {
        println!("wrote {}", path.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Roc(args) => {
            let report = run_roc_experiment(&args.config(DESK_ROC)?, args.threads)?;
            for curve in &report.summary.curves {
                println!("theta {:>5} deg: AUC {:.4}", curve.theta_degrees, curve.auc);
            }
            print_outputs(report.csv_files.iter().chain([&report.metadata_file]));
        }
        Command::SuccessTable(args) => {
            let table = run_success_table(&args.config(DESK_SUCCESS)?, args.threads)?;
            for row in &table.rows {
                println!(
                    "m {:>5} q {:>5} se0 {:.1e}: success {:.2} ({} runs, {} errors)",
                    row.m, row.q, row.se0, row.success_prob, row.runs, row.failures_by_error
                );
            }
            print_outputs([&table.csv_file, &table.metadata_file]);
        }
        Command::Compare(args) => {
            let report = run_comparison(&args.config(DESK_COMPARE)?, args.threads)?;
            for track in &report.summary.tracks {
                println!(
                    "{:>14}: final norm_err {:.3e}",
                    track.algorithm, track.final_norm_err_mean
                );
            }
            print_outputs(report.csv_files.iter().chain([&report.metadata_file]));
        }
        Command::Demo(args) => {
            let demo = run_demo(&args.config(DEMO)?)?;
            println!("prior subspace error {:.3e}", demo.prior_se);
            for (label, outcome) in [
                ("unchanged data", demo.unchanged),
                ("rotated data", demo.changed),
            ] {
                println!(
                    "{label}: statistic {:.4} vs C = {}: {}",
                    outcome.statistic,
                    outcome.threshold_c,
                    if outcome.changed {
                        "change detected"
                    } else {
                        "no change"
                    }
                );
            }
            println!(
                "recovered subspace error after {} iterations: {:.3e}",
                demo.iterations, demo.final_se
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
