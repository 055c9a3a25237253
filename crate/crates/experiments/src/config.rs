//! JSON experiment definitions.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use pst_core::detection::{threshold_grid, DEFAULT_THRESHOLD};
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};

pub const DESK_ROC: &str = include_str!("../configs/roc_desk.json");
pub const DESK_SUCCESS: &str = include_str!("../configs/success_desk.json");
pub const DESK_COMPARE: &str = include_str!("../configs/compare_desk.json");
pub const DEMO: &str = include_str!("../configs/demo.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for CGrid {
    fn default() -> Self {
        Self {
            min: 0.0,
            max: 3.0,
            count: 301,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub q: usize,
    /// Success-table sweep; falls back to `[m]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_values: Option<Vec<usize>>,
    /// Success-table sweep; falls back to `[q]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_values: Option<Vec<usize>>,
    /// Success-table sweep; falls back to `[se0_target]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub se0_values: Option<Vec<f64>>,
    #[serde(default = "default_theta")]
    pub theta_degrees: Vec<f64>,
    pub se0_target: f64,
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub c_grid: CGrid,
    /// Threshold constant for single detections (demo).
    #[serde(default = "default_threshold")]
    pub threshold_c: f64,
    #[serde(default = "default_t_max")]
    pub t_max_pstpca: usize,
    #[serde(default = "default_delta_tol")]
    pub delta_tol: f64,
    #[serde(default = "default_refine")]
    pub lrpr_refine_iters: usize,
    #[serde(default = "default_lrpr_iters")]
    pub lrpr_iters: usize,
    #[serde(default = "default_wf_iters")]
    pub wf_iters: usize,
    #[serde(default = "default_wf_step")]
    pub wf_step: f64,
    #[serde(default = "default_success_factor")]
    pub success_factor: f64,
    /// Coefficient variances; all ones when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_bar: Option<Vec<f64>>,
    /// When false, every timing column is written as zero so outputs are reproducible byte for byte.
    #[serde(default = "default_true")]
    pub timing: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_theta() -> Vec<f64> {
    vec![30.0]
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}
fn default_t_max() -> usize {
    12
}
fn default_delta_tol() -> f64 {
    1e-9
}
fn default_refine() -> usize {
    3
}
fn default_lrpr_iters() -> usize {
    15
}
fn default_wf_iters() -> usize {
    200
}
fn default_wf_step() -> f64 {
    0.2
}
fn default_success_factor() -> f64 {
    1.5
}
fn default_true() -> bool {
    true
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn invalid(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::ConfigFile {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text).map_err(|e| match e {
            ExperimentError::Config(msg) => invalid(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n", self.n), ("r", self.r), ("m", self.m), ("q", self.q)] {
            if v == 0 {
                return Err(invalid(format!("{name} must be positive")));
            }
        }
        if self.r >= self.n {
            return Err(invalid(format!(
                "need r < n, got r={} and n={}",
                self.r, self.n
            )));
        }
        if self.runs == 0 {
            return Err(invalid("runs must be at least 1"));
        }
        if self.theta_degrees.is_empty() {
            return Err(invalid("theta_degrees is empty"));
        }
        if let Some(t) = self
            .theta_degrees
            .iter()
            .find(|t| !(**t > 0.0 && **t <= 90.0))
        {
            return Err(invalid(format!("theta {t} outside (0, 90] degrees")));
        }
        for se0 in self.se0_list() {
            if !(0.0..1.0).contains(&se0) {
                return Err(invalid(format!("se0 {se0} outside [0, 1)")));
            }
        }
        for (name, list) in [("m_values", &self.m_values), ("q_values", &self.q_values)] {
            match list {
                Some(v) if v.is_empty() => return Err(invalid(format!("{name} is empty"))),
                Some(v) if v.contains(&0) => {
                    return Err(invalid(format!("{name} must be positive")))
                }
                _ => {}
            }
        }
        if matches!(&self.se0_values, Some(v) if v.is_empty()) {
            return Err(invalid("se0_values is empty"));
        }
        if !(self.c_grid.min >= 0.0) {
            return Err(invalid(format!(
                "c_grid.min {} must be nonnegative",
                self.c_grid.min
            )));
        }
        self.thresholds()?;
        if !(self.threshold_c >= 0.0) {
            return Err(invalid("threshold_c must be nonnegative"));
        }
        if !(self.delta_tol >= 0.0) {
            return Err(invalid("delta_tol must be nonnegative"));
        }
        if !(self.wf_step > 0.0 && self.wf_step.is_finite()) {
            return Err(invalid("wf_step must be positive"));
        }
        if !(self.success_factor > 0.0) {
            return Err(invalid("success_factor must be positive"));
        }
        if let Some(lam) = &self.lambda_bar {
            if lam.len() != self.r {
                return Err(invalid(format!(
                    "lambda_bar has {} entries, need r={}",
                    lam.len(),
                    self.r
                )));
            }
            if lam.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
                return Err(invalid("lambda_bar entries must be positive"));
            }
        }
        Ok(())
    }

    pub fn thresholds(&self) -> Result<Vec<f64>> {
        threshold_grid(self.c_grid.min, self.c_grid.max, self.c_grid.count)
            .map_err(|e| invalid(e.to_string()))
    }

    pub fn lambda(&self) -> DVector<f64> {
        match &self.lambda_bar {
            Some(v) => DVector::from_vec(v.clone()),
            None => DVector::from_element(self.r, 1.0),
        }
    }

    pub fn m_list(&self) -> Vec<usize> {
        self.m_values.clone().unwrap_or_else(|| vec![self.m])
    }

    pub fn q_list(&self) -> Vec<usize> {
        self.q_values.clone().unwrap_or_else(|| vec![self.q])
    }

    pub fn se0_list(&self) -> Vec<f64> {
        self.se0_values
            .clone()
            .unwrap_or_else(|| vec![self.se0_target])
    }

    /// Rotation angle for single-angle experiments.
    pub fn theta(&self) -> f64 {
        self.theta_degrees[0]
    }
}
