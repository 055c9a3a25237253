//! Subspace and recovery error measures.

use nalgebra::{DMatrix, DVector};

use crate::error::{PstError, Result};
use crate::model::BasisMatrix;

/// `||(I - Û Û') U||`, the sine of the largest principal angle between the spans.
///
/// Computed as the top singular value of `U - Û (Û' U)`, so no `n x n`
/// projector is formed. The two bases may have different ranks.
pub fn subspace_error(u_hat: &BasisMatrix, u: &BasisMatrix) -> Result<f64> {
    if u_hat.ambient_dim() != u.ambient_dim() {
        return Err(PstError::DimensionMismatch(format!(
            "bases live in R^{} and R^{}",
            u_hat.ambient_dim(),
            u.ambient_dim()
        )));
    }
    let (uh, um) = (u_hat.matrix(), u.matrix());
    let residual = um - uh * uh.tr_mul(um);
    let top = residual.svd(false, false).singular_values.max();
    Ok(top.min(1.0))
}

/// `min(||z1 - z2||, ||z1 + z2||)`, the real case of the phase-invariant distance.
pub fn phase_invariant_dist(z1: &DVector<f64>, z2: &DVector<f64>) -> Result<f64> {
    if z1.len() != z2.len() {
        return Err(PstError::DimensionMismatch(format!(
            "vectors of length {} and {}",
            z1.len(),
            z2.len()
        )));
    }
    Ok(column_dist(z1.as_slice(), z2.as_slice()))
}

fn column_dist(a: &[f64], b: &[f64]) -> f64 {
    let (mut minus, mut plus) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        minus += (x - y) * (x - y);
        plus += (x + y) * (x + y);
    }
    f64::min(minus, plus).sqrt()
}

/// Per-column phase-invariant distances between `x_true` and `x_hat`.
pub fn column_distances(x_true: &DMatrix<f64>, x_hat: &DMatrix<f64>) -> Result<DVector<f64>> {
    if x_true.shape() != x_hat.shape() {
        return Err(PstError::DimensionMismatch(format!(
            "signal matrices {:?} and {:?}",
            x_true.shape(),
            x_hat.shape()
        )));
    }
    Ok(DVector::from_iterator(
        x_true.ncols(),
        x_true
            .column_iter()
            .zip(x_hat.column_iter())
            .map(|(a, b)| column_dist(a.as_slice(), b.as_slice())),
    ))
}

/// `sum_k dist(x_k, x̂_k)^2 / sum_k ||x_k||^2`.
pub fn norm_err(x_true: &DMatrix<f64>, x_hat: &DMatrix<f64>) -> Result<f64> {
    let dists = column_distances(x_true, x_hat)?;
    let energy = x_true.norm_squared();
    if energy == 0.0 {
        return Err(PstError::ZeroSignal);
    }
    Ok(dists.norm_squared() / energy)
}

/// Subspace and signal errors of one estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub se: f64,
    pub norm_err: f64,
    pub per_column_dist: DVector<f64>,
}

impl ErrorReport {
    pub fn compute(
        u_hat: &BasisMatrix,
        u_true: &BasisMatrix,
        x_true: &DMatrix<f64>,
        x_hat: &DMatrix<f64>,
    ) -> Result<Self> {
        let per_column_dist = column_distances(x_true, x_hat)?;
        let energy = x_true.norm_squared();
        if energy == 0.0 {
            return Err(PstError::ZeroSignal);
        }
        Ok(Self {
            se: subspace_error(u_hat, u_true)?,
            norm_err: per_column_dist.norm_squared() / energy,
            per_column_dist,
        })
    }
}
