//! One small end-to-end tracking step: detect the change, then recover the new subspace.

use pst_core::detection::{detect_change, DetectionOutcome};
use pst_core::metrics::subspace_error;
use pst_core::model::{
    generate_subspace, perturb_subspace, rotate_one_direction, seeded_rng, Episode,
};
use pst_core::pstpca::{run_pst_pca, PstPcaOptions};

use crate::config::ExperimentConfig;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub prior_se: f64,
    pub unchanged: DetectionOutcome,
    pub changed: DetectionOutcome,
    /// Error of the recovered basis against the rotated subspace.
    pub final_se: f64,
    pub iterations: usize,
}

pub fn run_demo(config: &ExperimentConfig) -> Result<DemoReport> {
    config.validate()?;
    let (n, r, seed) = (config.n, config.r, config.seed);
    let u0 = generate_subspace(n, r, &mut seeded_rng(seed, 0))?;
    let prior = perturb_subspace(&u0, config.se0_target, &mut seeded_rng(seed, 1))?;
    let (u1, _) = rotate_one_direction(
        &u0,
        config.theta().to_radians(),
        r - 1,
        &mut seeded_rng(seed, 2),
    )?;
    let lambda = config.lambda();
    let changed_ep = Episode::generate(u1, config.q, config.m, &lambda, &mut seeded_rng(seed, 3))?;
    let unchanged_ep = Episode::generate(
        u0.clone(),
        config.q,
        config.m,
        &lambda,
        &mut seeded_rng(seed, 4),
    )?;

    let unchanged = detect_change(&unchanged_ep.measurements, &prior, config.threshold_c)?;
    let changed = detect_change(&changed_ep.measurements, &prior, config.threshold_c)?;
    let opts = PstPcaOptions {
        t_max: config.t_max_pstpca,
        delta_tol: config.delta_tol,
        stop_below_se: None,
    };
    let result = run_pst_pca(
        &changed_ep.measurements,
        &prior,
        &opts,
        Some(changed_ep.truth()),
    )?;
    Ok(DemoReport {
        prior_se: subspace_error(&prior, &u0)?,
        unchanged,
        changed,
        final_se: result.final_se().unwrap_or(f64::NAN),
        iterations: result.trace.len() - 1,
    })
}
