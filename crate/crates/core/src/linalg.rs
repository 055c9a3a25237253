//! Small dense kernels shared by the spectral builders and the least-squares steps.

use nalgebra::{DMatrix, DVector, Dyn, MatrixView, SymmetricEigen};

use crate::error::{PstError, Result};

/// Condition estimate above which the SPD solver adds a ridge.
pub(crate) const RIDGE_CONDITION: f64 = 1e12;
/// Condition estimate beyond which a system is treated as rank deficient.
const SINGULAR_CONDITION: f64 = 1e16;

/// Thin QR with the sign convention `diag(R) >= 0`, returning only `Q`.
pub fn orthonormalize(m: DMatrix<f64>) -> DMatrix<f64> {
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q.ncols() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Largest entry of `|U'U - I|`.
pub fn orthonormality_defect(u: &DMatrix<f64>) -> f64 {
    let gram = u.tr_mul(u);
    let mut worst = 0.0f64;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Strided view of `a'` that shares storage with `a`, so products against it
/// go through the blocked GEMM path without a copy.
pub(crate) fn transposed(a: &DMatrix<f64>) -> MatrixView<'_, f64, Dyn, Dyn, Dyn, Dyn> {
    let (nrows, ncols) = a.shape();
    MatrixView::from_slice_with_strides_generic(
        a.as_slice(),
        Dyn(ncols),
        Dyn(nrows),
        Dyn(nrows),
        Dyn(1),
    )
}

/// `acc += alpha * A diag(w) A'`.
pub(crate) fn add_weighted_gram(
    acc: &mut DMatrix<f64>,
    a: &DMatrix<f64>,
    w: &DVector<f64>,
    alpha: f64,
) {
    let mut scaled = a.clone();
    for (mut col, &wi) in scaled.column_iter_mut().zip(w.iter()) {
        col *= wi;
    }
    acc.gemm(alpha, &scaled, &transposed(a), 1.0);
}

pub(crate) fn max_asymmetry(s: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..s.ncols() {
        for i in 0..j {
            worst = worst.max((s[(i, j)] - s[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(s: &mut DMatrix<f64>) {
    let n = s.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
            s[(i, j)] = avg;
            s[(j, i)] = avg;
        }
    }
}

/// Largest number of stored entries for cached sensing Gram matrices.
pub(crate) const GRAM_CACHE_ENTRIES: usize = 40_000_000;

/// `A_t A_t'` for every time, computed once and reused across iterations.
/// Stored as one `n^2 x q` matrix so weighted sums over `t` are single products.
pub(crate) struct SensingGrams {
    n: usize,
    stacked: DMatrix<f64>,
}

impl SensingGrams {
    /// `None` when the matrices would exceed [`GRAM_CACHE_ENTRIES`].
    pub(crate) fn build(sensing: &[DMatrix<f64>]) -> Option<Self> {
        let n = sensing.first()?.nrows();
        if n * n * sensing.len() > GRAM_CACHE_ENTRIES {
            return None;
        }
        let mut stacked = DMatrix::zeros(n * n, sensing.len());
        let mut g = DMatrix::zeros(n, n);
        for (t, a) in sensing.iter().enumerate() {
            g.gemm(1.0, a, &transposed(a), 0.0);
            stacked.column_mut(t).copy_from_slice(g.as_slice());
        }
        Some(Self { n, stacked })
    }

    /// `sum_t w[t, k] A_t A_t'` for every column `k` of `w`, each as a column of length `n^2`.
    pub(crate) fn weighted_sums(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        &self.stacked * w
    }

    /// `sum_t w_t A_t A_t'`.
    pub(crate) fn weighted_sum(&self, w: &DVector<f64>) -> DMatrix<f64> {
        let flat = &self.stacked * w;
        DMatrix::from_column_slice(self.n, self.n, flat.as_slice())
    }
}

/// Full symmetric EVD with eigenvalues sorted in descending order.
pub(crate) fn sorted_eigen(s: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(s.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Flip `v` so its first non-negligible coordinate is positive.
pub(crate) fn canonical_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if let Some(first) = v
        .iter()
        .copied()
        .find(|x| x.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE))
    {
        if first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Solve the symmetric positive-definite system `g x = rhs` by Cholesky.
///
/// When the pivot-based condition estimate exceeds [`RIDGE_CONDITION`] a ridge
/// of `1e-10 * tr(g) / n` is added to the diagonal before solving. Systems whose
/// factorization breaks down, or whose estimate exceeds `1e16`, are reported as
/// rank deficient.
pub(crate) fn solve_spd(g: DMatrix<f64>, rhs: &DVector<f64>, what: &str) -> Result<DVector<f64>> {
    let n = g.nrows();
    let trace = g.trace();
    if !(trace > 0.0) {
        return Err(PstError::RankDeficient(format!(
            "{what}: normal matrix has zero trace"
        )));
    }
    let chol = g.clone().cholesky().ok_or_else(|| {
        PstError::RankDeficient(format!("{what}: normal matrix is numerically singular"))
    })?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| {
        (lo.min(d), hi.max(d))
    });
    let cond = (hi / lo).powi(2);
    if cond <= RIDGE_CONDITION {
        return Ok(chol.solve(rhs));
    }
    if cond > SINGULAR_CONDITION {
        return Err(PstError::RankDeficient(format!(
            "{what}: condition estimate {cond:e}"
        )));
    }
    let mut ridged = g;
    let ridge = 1e-10 * trace / n as f64;
    for i in 0..n {
        ridged[(i, i)] += ridge;
    }
    ridged.cholesky().map(|c| c.solve(rhs)).ok_or_else(|| {
        PstError::RankDeficient(format!("{what}: ridge-regularized factorization failed"))
    })
}

/// Least-squares solve of `design * x ≈ rhs` via QR. Requires full column rank.
pub(crate) fn lstsq_qr(
    design: DMatrix<f64>,
    rhs: &DVector<f64>,
    what: &str,
) -> Result<DVector<f64>> {
    let (rows, cols) = design.shape();
    if rows < cols {
        return Err(PstError::RankDeficient(format!(
            "{what}: {rows} equations for {cols} unknowns"
        )));
    }
    let qr = design.qr();
    let r = qr.r();
    let rmax = r.diagonal().amax();
    if !(rmax > 0.0) || r.diagonal().iter().any(|d| d.abs() <= 1e-12 * rmax) {
        return Err(PstError::RankDeficient(format!(
            "{what}: design matrix is rank deficient"
        )));
    }
    let qtb = qr.q().tr_mul(rhs);
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| PstError::RankDeficient(format!("{what}: singular triangular factor")))
}
