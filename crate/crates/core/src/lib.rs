//! Phaseless subspace tracking.
//!
//! Signals `x_t = U b_t` live in an `r`-dimensional subspace of `R^n` that
//! changes one direction at a time. Only magnitudes `y_t = |A_t' x_t|` are
//! observed. This crate detects a change from a spectral statistic, recovers
//! the new subspace by augmenting the previous estimate with one direction,
//! and provides full-subspace and per-signal baselines for comparison.

// Negated float comparisons are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod detection;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod pstpca;
pub mod spectral;

pub use baselines::{lrpr_altmin, wf_columns, wf_single, BaselineConfig, InitMode, WfResult};
pub use detection::{
    detect_change, detection_statistic, roc_auc, roc_curve, DetectionOutcome, DetectionScenario,
    RocPoint,
};
pub use error::{PstError, Result};
pub use metrics::{norm_err, phase_invariant_dist, subspace_error, ErrorReport};
pub use model::{
    seeded_rng, BasisMatrix, ChangeEvent, Episode, Measurements, ScenarioSpec, TrackingScenario,
};
pub use pstpca::{
    refine_with_lrpr, run_pst_pca, GroundTruth, PstPcaOptions, RecoveryResult, TraceEntry,
};
pub use spectral::{build_yb, build_yu, SpectralSummary};
