//! Subspace change detection by thresholding `λ_1(Ỹ_U) / λ_n(Y_U)`.
//!
//! Without a change both eigenvalues estimate `tr(Λ)`, so the ratio sits near
//! one; a change lifts the top eigenvalue of the projected matrix by
//! `2 sin^2(θ) λ`. A change is declared when the ratio reaches `C`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PstError, Result};
use crate::model::{
    generate_subspace, perturb_subspace, rotate_one_direction, seeded_rng, stream_episode,
    BasisMatrix, Measurements,
};
use crate::spectral::{build_yu, SpectralSummary, YuAccumulator};

/// Default threshold constant: slightly above one.
pub const DEFAULT_THRESHOLD: f64 = 1.15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOutcome {
    pub changed: bool,
    /// `λ_1(Ỹ_U) / λ_n(Y_U)`.
    pub statistic: f64,
    pub threshold_c: f64,
}

impl DetectionOutcome {
    /// Ties count as detections.
    pub fn from_statistic(statistic: f64, threshold_c: f64) -> Self {
        Self {
            changed: statistic >= threshold_c,
            statistic,
            threshold_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub c: f64,
    pub true_positive_rate: f64,
    pub false_positive_rate: f64,
}

/// Detection statistic from a precomputed `Y_U`.
pub fn statistic_from_yu(y_u: DMatrix<f64>, u_prev_hat: &BasisMatrix) -> Result<f64> {
    let summary = SpectralSummary::from_yu(y_u, u_prev_hat)?;
    let scale = summary.y_u.amax().max(f64::MIN_POSITIVE);
    if summary.lam_n <= 1e-12 * scale {
        return Err(PstError::IndeterminateStatistic(summary.lam_n));
    }
    Ok(summary.lam1_tilde / summary.lam_n)
}

pub fn detection_statistic(meas: &Measurements, u_prev_hat: &BasisMatrix) -> Result<f64> {
    statistic_from_yu(build_yu(meas)?, u_prev_hat)
}

pub fn detect_change(
    meas: &Measurements,
    u_prev_hat: &BasisMatrix,
    c: f64,
) -> Result<DetectionOutcome> {
    if !(c >= 0.0) {
        return Err(PstError::InvalidConfig(format!(
            "threshold {c} must be nonnegative"
        )));
    }
    Ok(DetectionOutcome::from_statistic(
        detection_statistic(meas, u_prev_hat)?,
        c,
    ))
}

fn check_grid(c_grid: &[f64]) -> Result<()> {
    if c_grid.is_empty() {
        return Err(PstError::InvalidConfig("threshold grid is empty".into()));
    }
    if c_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(PstError::InvalidConfig(
            "threshold grid must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Empirical ROC: at each `c`, the fraction of changed-data statistics and
/// of unchanged-data statistics that reach `c`.
pub fn roc_from_statistics(
    changed: &[f64],
    unchanged: &[f64],
    c_grid: &[f64],
) -> Result<Vec<RocPoint>> {
    check_grid(c_grid)?;
    if changed.is_empty() || unchanged.is_empty() {
        return Err(PstError::EmptyInput(
            "ROC needs statistics from both datasets".into(),
        ));
    }
    let rate = |stats: &[f64], c: f64| {
        stats.iter().filter(|&&s| s >= c).count() as f64 / stats.len() as f64
    };
    Ok(c_grid
        .iter()
        .map(|&c| RocPoint {
            c,
            true_positive_rate: rate(changed, c),
            false_positive_rate: rate(unchanged, c),
        })
        .collect())
}

/// Trapezoidal area under the ROC polyline, closed with the `(0,0)` and `(1,1)` corners.
pub fn roc_auc(points: &[RocPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.false_positive_rate, p.true_positive_rate))
        .collect();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[1].1 + w[0].1))
        .sum()
}

/// `count` evenly spaced thresholds on `[min, max]`.
pub fn threshold_grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 || !(min <= max) || (count > 1 && min == max) {
        return Err(PstError::InvalidConfig(format!(
            "bad grid [{min}, {max}] x {count}"
        )));
    }
    if count == 1 {
        return Ok(vec![min]);
    }
    let step = (max - min) / (count - 1) as f64;
    Ok((0..count)
        .map(|k| {
            if k + 1 == count {
                max
            } else {
                min + step * k as f64
            }
        })
        .collect())
}

/// Synthetic detection setting: a prior estimate at subspace error `se0`
/// and a new episode whose subspace is rotated by `theta` (or unchanged).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionScenario {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub q: usize,
    /// Rotation angle in radians; `None` means the subspace does not change.
    pub theta: Option<f64>,
    pub se0: f64,
    pub lambda_bar: DVector<f64>,
    pub chg_index: usize,
}

// Random streams of one run seed. Changed and unchanged data use separate
// measurement streams; subspace, prior estimate and added direction are shared.
const STREAM_SUBSPACE: u64 = 0;
const STREAM_PRIOR: u64 = 1;
const STREAM_ROTATION: u64 = 2;
const STREAM_CHANGED: u64 = 3;
const STREAM_UNCHANGED: u64 = 4;

/// Draws one dataset for `scenario` from `seed` and returns its detection
/// statistic. Measurements are streamed into `Y_U`, never stored.
pub fn simulate_statistic(scenario: &DetectionScenario, seed: u64) -> Result<f64> {
    let u0 = generate_subspace(
        scenario.n,
        scenario.r,
        &mut seeded_rng(seed, STREAM_SUBSPACE),
    )?;
    let prior = perturb_subspace(&u0, scenario.se0, &mut seeded_rng(seed, STREAM_PRIOR))?;
    let (u_now, stream) = match scenario.theta {
        Some(theta) => {
            let mut rng = seeded_rng(seed, STREAM_ROTATION);
            (
                rotate_one_direction(&u0, theta, scenario.chg_index, &mut rng)?.0,
                STREAM_CHANGED,
            )
        }
        None => (u0, STREAM_UNCHANGED),
    };
    let mut acc = YuAccumulator::new(scenario.n);
    let mut failure = None;
    stream_episode(
        &u_now,
        scenario.q,
        scenario.m,
        &scenario.lambda_bar,
        &mut seeded_rng(seed, stream),
        |_, a, y| {
            if let Err(e) = acc.push(a, y) {
                failure.get_or_insert(e);
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    statistic_from_yu(acc.finish()?, &prior)
}

/// Monte-Carlo ROC over `runs` seeded datasets of each scenario (run `k` uses
/// seed `base_seed + k`).
pub fn roc_curve(
    with_change: &DetectionScenario,
    without_change: &DetectionScenario,
    c_grid: &[f64],
    runs: usize,
    base_seed: u64,
) -> Result<Vec<RocPoint>> {
    check_grid(c_grid)?;
    if runs == 0 {
        return Err(PstError::InvalidConfig("need at least one run".into()));
    }
    let collect = |s: &DetectionScenario| -> Result<Vec<f64>> {
        (0..runs as u64)
            .map(|k| simulate_statistic(s, base_seed + k))
            .collect()
    };
    roc_from_statistics(&collect(with_change)?, &collect(without_change)?, c_grid)
}
