//! Monte-Carlo harness for the detection, recovery-success and
//! algorithm-comparison experiments, with seeded, thread-count independent
//! outputs.

// Negated float comparisons are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod config;
pub mod demo;
pub mod error;
pub mod output;
pub mod roc;
pub mod success;

pub use compare::{run_comparison, ComparisonReport, TraceRow};
pub use config::{CGrid, ExperimentConfig};
pub use error::{ExperimentError, Result};
pub use roc::{run_roc_experiment, RocReport};
pub use success::{run_success_table, ResultTable, SuccessRow};

use rayon::prelude::*;

/// Evaluates `f(k)` for `k in 0..runs` on a pool of `threads` workers
/// (`0` lets rayon decide) and returns the results in run order.
pub fn run_indexed<T, F>(runs: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..runs).into_par_iter().map(&f).collect()))
}

/// Wall-clock seconds since `started`, or zero when timing is disabled.
pub(crate) fn clock(timing: bool, started: std::time::Instant) -> f64 {
    if timing {
        started.elapsed().as_secs_f64()
    } else {
        0.0
    }
}
