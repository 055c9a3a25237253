//! Spectral matrices built from squared magnitudes and the eigen-extraction
//! used by change detection and initialization.
//!
//! `Y_U = (1/mq) sum_{i,t} y_{i,t}^2 a_{i,t} a_{i,t}'` has expectation
//! `2 U Λ U' + tr(Λ) I`. Projecting out the previous subspace leaves a matrix
//! whose top eigenvector estimates the added direction, with an eigen-gap of
//! `2 sin^2(θ) λ` where `λ` is the variance carried by the changed direction.

use nalgebra::{DMatrix, DVector};

use crate::error::{PstError, Result};
use crate::linalg::{add_weighted_gram, canonical_sign, max_asymmetry, sorted_eigen, symmetrize};
use crate::model::{BasisMatrix, Measurements};

/// Streaming accumulator for `Y_U`; one `(A_t, y_t)` block at a time.
#[derive(Debug, Clone)]
pub struct YuAccumulator {
    sum: DMatrix<f64>,
    count: usize,
}

impl YuAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            sum: DMatrix::zeros(n, n),
            count: 0,
        }
    }

    pub fn push(&mut self, sensing_t: &DMatrix<f64>, magnitudes_t: &DVector<f64>) -> Result<()> {
        if sensing_t.nrows() != self.sum.nrows() || sensing_t.ncols() != magnitudes_t.len() {
            return Err(PstError::DimensionMismatch(format!(
                "block {:?} with {} magnitudes into an accumulator of size {}",
                sensing_t.shape(),
                magnitudes_t.len(),
                self.sum.nrows()
            )));
        }
        add_weighted_gram(&mut self.sum, sensing_t, &magnitudes_t.map(|y| y * y), 1.0);
        self.count += sensing_t.ncols();
        Ok(())
    }

    pub fn finish(mut self) -> Result<DMatrix<f64>> {
        if self.count == 0 {
            return Err(PstError::EmptyInput("no measurements accumulated".into()));
        }
        self.sum /= self.count as f64;
        symmetrize(&mut self.sum);
        Ok(self.sum)
    }
}

/// `(1/(mq)) sum_{i,t} y_{i,t}^2 a_{i,t} a_{i,t}'`.
pub fn build_yu(meas: &Measurements) -> Result<DMatrix<f64>> {
    let mut acc = YuAccumulator::new(meas.ambient_dim());
    for (t, a) in meas.sensing.iter().enumerate() {
        acc.push(a, &meas.magnitudes_at(t))?;
    }
    acc.finish()
}

/// `(I - Û Û') Y (I - Û Û')` without forming the projector.
pub fn project_out(y_u: &DMatrix<f64>, u_prev_hat: &BasisMatrix) -> Result<DMatrix<f64>> {
    let u = u_prev_hat.matrix();
    if y_u.nrows() != u.nrows() || !y_u.is_square() {
        return Err(PstError::DimensionMismatch(format!(
            "{:?} matrix against a basis in R^{}",
            y_u.shape(),
            u.nrows()
        )));
    }
    let yu = y_u * u;
    let core = u.tr_mul(&yu);
    let mut out = y_u - &yu * u.transpose() - u * yu.transpose() + u * core * u.transpose();
    symmetrize(&mut out);
    Ok(out)
}

/// `Ũ' [(1/m) sum_i y_i^2 a_i a_i'] Ũ`, computed through `M = Ũ' A_t`.
pub fn build_yb(
    u_tilde: &BasisMatrix,
    sensing_t: &DMatrix<f64>,
    magnitudes_t: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    if sensing_t.nrows() != u_tilde.ambient_dim() || sensing_t.ncols() != magnitudes_t.len() {
        return Err(PstError::DimensionMismatch(
            "sensing block does not match basis or magnitudes".into(),
        ));
    }
    let proj = u_tilde.matrix().tr_mul(sensing_t);
    let mut out = DMatrix::zeros(proj.nrows(), proj.nrows());
    add_weighted_gram(
        &mut out,
        &proj,
        &magnitudes_t.map(|y| y * y),
        1.0 / magnitudes_t.len() as f64,
    );
    symmetrize(&mut out);
    Ok(out)
}

fn check_symmetric(s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() || s.nrows() == 0 {
        return Err(PstError::InvalidDimension(format!(
            "expected a nonempty square matrix, got {:?}",
            s.shape()
        )));
    }
    let asym = max_asymmetry(s);
    if asym > 1e-10 * s.amax().max(1.0) {
        return Err(PstError::NotSymmetric(asym));
    }
    Ok(())
}

/// Largest eigenvalue and a unit eigenvector whose first nonzero entry is positive.
pub fn top_eigenpair(s: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    check_symmetric(s)?;
    let (values, vectors) = sorted_eigen(s);
    let mut v = vectors.column(0).into_owned();
    v.normalize_mut();
    canonical_sign(&mut v);
    Ok((values[0], v))
}

pub fn min_eigenvalue(s: &DMatrix<f64>) -> Result<f64> {
    check_symmetric(s)?;
    let (values, _) = sorted_eigen(s);
    Ok(values[values.len() - 1])
}

/// Leading `k` eigenvectors (descending eigenvalue order) of a symmetric matrix.
pub fn top_eigenvectors(s: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    check_symmetric(s)?;
    if k > s.nrows() {
        return Err(PstError::InvalidDimension(format!(
            "{k} eigenvectors of a {}-dim matrix",
            s.nrows()
        )));
    }
    let (_, vectors) = sorted_eigen(s);
    Ok(vectors.columns(0, k).into_owned())
}

/// The quantities change detection and initialization read off `Y_U` and `Ỹ_U`.
#[derive(Debug, Clone)]
pub struct SpectralSummary {
    pub y_u: DMatrix<f64>,
    pub y_u_tilde: DMatrix<f64>,
    /// `λ_1(Ỹ_U)`.
    pub lam1_tilde: f64,
    /// `λ_n(Y_U)`, the estimate of `tr(Λ)`.
    pub lam_n: f64,
    pub top_vec_tilde: DVector<f64>,
}

impl SpectralSummary {
    pub fn from_yu(y_u: DMatrix<f64>, u_prev_hat: &BasisMatrix) -> Result<Self> {
        let y_u_tilde = project_out(&y_u, u_prev_hat)?;
        let (lam1_tilde, top_vec_tilde) = top_eigenpair(&y_u_tilde)?;
        let lam_n = min_eigenvalue(&y_u)?;
        Ok(Self {
            y_u,
            y_u_tilde,
            lam1_tilde,
            lam_n,
            top_vec_tilde,
        })
    }

    pub fn compute(meas: &Measurements, u_prev_hat: &BasisMatrix) -> Result<Self> {
        Self::from_yu(build_yu(meas)?, u_prev_hat)
    }
}
