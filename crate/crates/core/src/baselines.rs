//! Comparison algorithms: full-subspace alternating minimization (LRPR-AltMin)
//! and a per-signal Wirtinger flow.

use std::time::Instant;

use nalgebra::{DMatrix, DMatrixView, DVector};

use crate::error::{PstError, Result};
use crate::linalg::{orthonormalize, solve_spd, transposed, SensingGrams};
use crate::metrics::norm_err;
use crate::model::{BasisMatrix, Measurements};
use crate::pstpca::{
    coeff_matrix, init_coeffs, phase_matrix, signed_magnitudes, GroundTruth, RecoveryResult,
    TraceEntry,
};
use crate::spectral::{build_yu, top_eigenpair, top_eigenvectors};

/// Largest `n r` for which the subspace update assembles and factors the dense
/// normal matrix; above it a preconditioned conjugate-gradient solve is used.
pub const DENSE_SUBSPACE_LIMIT: usize = 4000;
pub const DEFAULT_WF_STEP: f64 = 0.2;
pub const DEFAULT_WF_ITERS: usize = 200;
const MAX_HALVINGS: usize = 5;

#[derive(Debug, Clone, Default)]
pub enum InitMode {
    #[default]
    Spectral,
    WarmStart {
        u: BasisMatrix,
        b: DMatrix<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct BaselineConfig {
    pub max_iters: usize,
    /// Wirtinger flow only; the actual step is `step_size / ||x_0||^2`.
    pub step_size: f64,
    pub init_mode: InitMode,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            max_iters: 15,
            step_size: DEFAULT_WF_STEP,
            init_mode: InitMode::Spectral,
        }
    }
}

/// `argmin_U sum_t ||Ĉ_t y_t - A_t' U b_t||^2` before re-orthonormalization.
///
/// Unknowns are the columns of `U` stacked, and the
/// normal matrix has blocks `sum_t b_tk b_tl A_t A_t'`.
pub fn solve_subspace_raw(
    meas: &Measurements,
    phases: &DMatrix<f64>,
    coeffs: &DMatrix<f64>,
    start: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    solve_subspace_with_limit(meas, phases, coeffs, start, DENSE_SUBSPACE_LIMIT, None)
}

pub(crate) fn solve_subspace_with_limit(
    meas: &Measurements,
    phases: &DMatrix<f64>,
    coeffs: &DMatrix<f64>,
    start: &DMatrix<f64>,
    dense_limit: usize,
    grams: Option<&SensingGrams>,
) -> Result<DMatrix<f64>> {
    let (n, r, q) = (meas.ambient_dim(), coeffs.nrows(), meas.len());
    if coeffs.ncols() != q || phases.shape() != meas.magnitudes.shape() || start.shape() != (n, r) {
        return Err(PstError::DimensionMismatch(
            "subspace update inputs do not match the measurements".into(),
        ));
    }
    if meas.per_signal() * q < n * r {
        return Err(PstError::RankDeficient(format!(
            "subspace update: {} equations for {} unknowns",
            meas.per_signal() * q,
            n * r
        )));
    }
    if n * r <= dense_limit {
        solve_subspace_dense(meas, phases, coeffs, grams)
    } else {
        solve_subspace_cg(meas, phases, coeffs, start)
    }
}

fn solve_subspace_dense(
    meas: &Measurements,
    phases: &DMatrix<f64>,
    coeffs: &DMatrix<f64>,
    grams: Option<&SensingGrams>,
) -> Result<DMatrix<f64>> {
    let (n, r, q) = (meas.ambient_dim(), coeffs.nrows(), meas.len());
    let pairs: Vec<(usize, usize)> = (0..r).flat_map(|k| (k..r).map(move |l| (k, l))).collect();
    let mut normal = DMatrix::zeros(n * r, n * r);
    let mut rhs = DVector::zeros(n * r);
    for (t, a) in meas.sensing.iter().enumerate() {
        let w = a * signed_magnitudes(meas, phases, t);
        for k in 0..r {
            rhs.rows_mut(k * n, n).axpy(coeffs[(k, t)], &w, 1.0);
        }
    }
    let mut place = |k: usize, l: usize, block: &[f64]| {
        let block = DMatrixView::from_slice(block, n, n);
        normal.view_mut((k * n, l * n), (n, n)).copy_from(&block);
        if k != l {
            normal
                .view_mut((l * n, k * n), (n, n))
                .copy_from(&block.transpose());
        }
    };
    match grams {
        Some(cache) => {
            let weights = DMatrix::from_fn(q, pairs.len(), |t, p| {
                coeffs[(pairs[p].0, t)] * coeffs[(pairs[p].1, t)]
            });
            let blocks = cache.weighted_sums(&weights);
            for (p, &(k, l)) in pairs.iter().enumerate() {
                place(k, l, blocks.column(p).as_slice());
            }
        }
        None => {
            let mut blocks = vec![DMatrix::<f64>::zeros(n, n); pairs.len()];
            let mut gram = DMatrix::zeros(n, n);
            for (t, a) in meas.sensing.iter().enumerate() {
                gram.gemm(1.0, a, &transposed(a), 0.0);
                for (block, &(k, l)) in blocks.iter_mut().zip(&pairs) {
                    let c = coeffs[(k, t)] * coeffs[(l, t)];
                    block.zip_apply(&gram, |x, g| *x += c * g);
                }
            }
            for (block, &(k, l)) in blocks.iter().zip(&pairs) {
                place(k, l, block.as_slice());
            }
        }
    }
    let sol = solve_spd(normal, &rhs, "subspace update")?;
    Ok(DMatrix::from_column_slice(n, r, sol.as_slice()))
}

/// Jacobi-preconditioned CG on the same normal equations, matrix-free.
fn solve_subspace_cg(
    meas: &Measurements,
    phases: &DMatrix<f64>,
    coeffs: &DMatrix<f64>,
    start: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (n, r) = (meas.ambient_dim(), coeffs.nrows());
    let apply = |v: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::zeros(n, r);
        for (t, a) in meas.sensing.iter().enumerate() {
            let b = coeffs.column(t);
            let z = a.tr_mul(&(v * b));
            let az = a * z;
            out.ger(1.0, &az, &b, 1.0);
        }
        out
    };
    let mut rhs = DMatrix::zeros(n, r);
    let mut diag = DMatrix::zeros(n, r);
    for (t, a) in meas.sensing.iter().enumerate() {
        let b = coeffs.column(t);
        rhs.ger(1.0, &(a * signed_magnitudes(meas, phases, t)), &b, 1.0);
        let row_energy = DVector::from_iterator(n, a.row_iter().map(|row| row.norm_squared()));
        diag.ger(1.0, &row_energy, &b.component_mul(&b), 1.0);
    }
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(PstError::RankDeficient(
            "subspace update: empty normal-matrix diagonal".into(),
        ));
    }
    let precond = |res: &DMatrix<f64>| res.component_div(&diag);

    let mut x = start.clone();
    let mut res = &rhs - apply(&x);
    let mut z = precond(&res);
    let mut p = z.clone();
    let mut rz = res.dot(&z);
    let target = 1e-12 * rhs.norm();
    for _ in 0..(10 * n * r).min(2000) {
        if res.norm() <= target {
            break;
        }
        let ap = apply(&p);
        let curvature = p.dot(&ap);
        if !(curvature > 0.0) {
            return Err(PstError::RankDeficient(
                "subspace update: non-positive curvature".into(),
            ));
        }
        let alpha = rz / curvature;
        x.zip_apply(&p, |v, d| *v += alpha * d);
        res.zip_apply(&ap, |v, d| *v -= alpha * d);
        z = precond(&res);
        let rz_next = res.dot(&z);
        p = &z + &p * (rz_next / rz);
        rz = rz_next;
    }
    Ok(x)
}

/// Spectral start: top-`r` eigenvectors of `Y_U`, coefficients from the `r x r` `Y_b`.
pub fn lrpr_spectral_init(meas: &Measurements, r: usize) -> Result<(BasisMatrix, DMatrix<f64>)> {
    if r == 0 || r > meas.ambient_dim() {
        return Err(PstError::InvalidDimension(format!(
            "rank {r} in R^{}",
            meas.ambient_dim()
        )));
    }
    let u = BasisMatrix::with_tolerance(top_eigenvectors(&build_yu(meas)?, r)?, 1e-8)?;
    let mut b = DMatrix::zeros(r, meas.len());
    for (t, a) in meas.sensing.iter().enumerate() {
        b.set_column(t, &init_coeffs(&u, a, &meas.magnitudes_at(t))?);
    }
    Ok((u, b))
}

fn result_from(u: BasisMatrix, b: DMatrix<f64>, trace: Vec<TraceEntry>) -> RecoveryResult {
    let x_hat = u.matrix() * &b;
    RecoveryResult {
        u_hat: u,
        b_hat: b,
        x_hat,
        trace,
    }
}

/// LRPR-AltMin: phases, full subspace by least squares, QR, coefficients by least squares.
pub fn lrpr_altmin(
    meas: &Measurements,
    r: usize,
    config: &BaselineConfig,
    truth: Option<GroundTruth<'_>>,
) -> Result<RecoveryResult> {
    let started = Instant::now();
    if meas.per_signal() < r {
        return Err(PstError::RankDeficient(format!(
            "{} measurements per signal for rank {r}",
            meas.per_signal()
        )));
    }
    let (mut u, mut b) = match &config.init_mode {
        InitMode::Spectral => lrpr_spectral_init(meas, r)?,
        InitMode::WarmStart { u, b } => {
            if u.rank() != r
                || u.ambient_dim() != meas.ambient_dim()
                || b.shape() != (r, meas.len())
            {
                return Err(PstError::DimensionMismatch(
                    "warm start does not match the problem".into(),
                ));
            }
            (u.clone(), b.clone())
        }
    };
    let mut result = result_from(u.clone(), b.clone(), Vec::new());
    result.push_trace(0, started, truth)?;
    let grams = if meas.ambient_dim() * r <= DENSE_SUBSPACE_LIMIT && config.max_iters > 1 {
        SensingGrams::build(&meas.sensing)
    } else {
        None
    };
    for iteration in 1..=config.max_iters {
        let phases = phase_matrix(&u, &b, meas);
        let raw = solve_subspace_with_limit(
            meas,
            &phases,
            &b,
            u.matrix(),
            DENSE_SUBSPACE_LIMIT,
            grams.as_ref(),
        )?;
        u = BasisMatrix::with_tolerance(orthonormalize(raw), 1e-8)?;
        b = coeff_matrix(&u, meas, &phases)?;
        let trace = std::mem::take(&mut result.trace);
        result = result_from(u.clone(), b.clone(), trace);
        result.push_trace(iteration, started, truth)?;
    }
    Ok(result)
}

/// `(1/4m) sum_i ((a_i' x)^2 - y_i^2)^2`.
pub fn wf_loss(sensing_t: &DMatrix<f64>, magnitudes_t: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let z = sensing_t.tr_mul(x);
    let m = magnitudes_t.len() as f64;
    z.iter()
        .zip(magnitudes_t.iter())
        .map(|(z, y)| (z * z - y * y).powi(2))
        .sum::<f64>()
        / (4.0 * m)
}

fn wf_gradient(
    sensing_t: &DMatrix<f64>,
    magnitudes_t: &DVector<f64>,
    x: &DVector<f64>,
) -> DVector<f64> {
    let z = sensing_t.tr_mul(x);
    let m = magnitudes_t.len() as f64;
    let w = DVector::from_iterator(
        z.len(),
        z.iter()
            .zip(magnitudes_t.iter())
            .map(|(z, y)| (z * z - y * y) * z / m),
    );
    sensing_t * w
}

/// Wirtinger flow with a visitor called on the iterate after every step (and on the init with `0`).
pub fn wf_path<F: FnMut(usize, &DVector<f64>)>(
    sensing_t: &DMatrix<f64>,
    magnitudes_t: &DVector<f64>,
    config: &BaselineConfig,
    mut visit: F,
) -> Result<DVector<f64>> {
    let (n, m) = sensing_t.shape();
    if m != magnitudes_t.len() || m == 0 {
        return Err(PstError::DimensionMismatch(format!(
            "{m} sensing vectors and {} magnitudes",
            magnitudes_t.len()
        )));
    }
    if !(config.step_size > 0.0) {
        return Err(PstError::InvalidConfig(format!(
            "step size {} must be positive",
            config.step_size
        )));
    }
    let scale = (magnitudes_t.norm_squared() / m as f64).sqrt();
    let mut x = if scale == 0.0 {
        DVector::zeros(n)
    } else {
        let mut yw = DMatrix::zeros(n, n);
        crate::linalg::add_weighted_gram(
            &mut yw,
            sensing_t,
            &magnitudes_t.map(|y| y * y),
            1.0 / m as f64,
        );
        crate::linalg::symmetrize(&mut yw);
        top_eigenpair(&yw)?.1 * scale
    };
    visit(0, &x);
    if scale == 0.0 {
        for k in 1..=config.max_iters {
            visit(k, &x);
        }
        return Ok(x);
    }
    let mut mu = config.step_size / x.norm_squared();
    let mut loss = wf_loss(sensing_t, magnitudes_t, &x);
    for k in 1..=config.max_iters {
        let grad = wf_gradient(sensing_t, magnitudes_t, &x);
        for halving in 0..=MAX_HALVINGS {
            let trial = &x - &grad * mu;
            let trial_loss = wf_loss(sensing_t, magnitudes_t, &trial);
            if trial_loss <= loss {
                x = trial;
                loss = trial_loss;
                break;
            }
            if halving < MAX_HALVINGS {
                mu *= 0.5;
            }
        }
        visit(k, &x);
    }
    Ok(x)
}

/// Plain Wirtinger flow for one signal from its own measurements.
pub fn wf_single(
    sensing_t: &DMatrix<f64>,
    magnitudes_t: &DVector<f64>,
    config: &BaselineConfig,
) -> Result<DVector<f64>> {
    wf_path(sensing_t, magnitudes_t, config, |_, _| {})
}

#[derive(Debug, Clone)]
pub struct WfResult {
    pub x_hat: DMatrix<f64>,
    /// Per-iteration `norm_err` over all columns; `seconds` sums the per-column times.
    pub trace: Vec<TraceEntry>,
}

/// Wirtinger flow run independently on every column.
pub fn wf_columns(
    meas: &Measurements,
    config: &BaselineConfig,
    truth: Option<&DMatrix<f64>>,
) -> Result<WfResult> {
    let (n, q) = (meas.ambient_dim(), meas.len());
    let iters = config.max_iters;
    let mut x_hat = DMatrix::zeros(n, q);
    let mut err_sq = vec![0.0; iters + 1];
    let mut seconds = vec![0.0; iters + 1];
    for (t, a) in meas.sensing.iter().enumerate() {
        let started = Instant::now();
        let x_true = truth.map(|x| x.column(t).into_owned());
        let x = wf_path(a, &meas.magnitudes_at(t), config, |k, x| {
            seconds[k] += started.elapsed().as_secs_f64();
            if let Some(xt) = &x_true {
                err_sq[k] += (xt - x).norm_squared().min((xt + x).norm_squared());
            }
        })?;
        x_hat.set_column(t, &x);
    }
    let energy = match truth {
        Some(x) => {
            if x.shape() != (n, q) {
                return Err(PstError::DimensionMismatch(
                    "truth does not match measurements".into(),
                ));
            }
            let e = x.norm_squared();
            if e == 0.0 {
                return Err(PstError::ZeroSignal);
            }
            Some(e)
        }
        None => None,
    };
    let trace = (0..=iters)
        .map(|k| TraceEntry {
            iteration: k,
            se: None,
            norm_err: energy.map(|e| err_sq[k] / e),
            seconds: seconds[k],
        })
        .collect();
    if let (Some(x), Some(last)) = (truth, energy) {
        debug_assert!((norm_err(x, &x_hat)? - err_sq[iters] / last).abs() <= 1e-9);
    }
    Ok(WfResult { x_hat, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_subspace, seeded_rng, Episode};

    fn episode(n: usize, r: usize, m: usize, q: usize, seed: u64) -> Episode {
        let u = generate_subspace(n, r, &mut seeded_rng(seed, 0)).unwrap();
        Episode::generate(
            u,
            q,
            m,
            &DVector::from_element(r, 1.0),
            &mut seeded_rng(seed, 1),
        )
        .unwrap()
    }

    #[test]
    fn dense_and_cg_subspace_updates_agree() {
        let ep = episode(12, 2, 15, 10, 3);
        let b = ep.coeffs.clone();
        let phases = DMatrix::from_fn(15, 10, |i, t| if (i + t) % 3 == 0 { -1.0 } else { 1.0 });
        let start = DMatrix::zeros(12, 2);
        let dense =
            solve_subspace_with_limit(&ep.measurements, &phases, &b, &start, usize::MAX, None)
                .unwrap();
        let cg = solve_subspace_with_limit(&ep.measurements, &phases, &b, &start, 0, None).unwrap();
        let grams = SensingGrams::build(&ep.measurements.sensing);
        assert!(grams.is_some());
        let cached = solve_subspace_with_limit(
            &ep.measurements,
            &phases,
            &b,
            &start,
            usize::MAX,
            grams.as_ref(),
        )
        .unwrap();
        assert!((&dense - cg).amax() <= 1e-8);
        assert!((dense - cached).amax() <= 1e-10);
    }

    #[test]
    fn fixed_point_at_ground_truth() {
        let ep = episode(30, 3, 40, 40, 7);
        let config = BaselineConfig {
            max_iters: 1,
            init_mode: InitMode::WarmStart {
                u: ep.u_true.clone(),
                b: ep.coeffs.clone(),
            },
            ..BaselineConfig::default()
        };
        let res = lrpr_altmin(&ep.measurements, 3, &config, Some(ep.truth())).unwrap();
        assert!(res.final_norm_err().unwrap() <= 1e-8);
        assert_eq!(res.trace.len(), 2);
    }

    #[test]
    fn underdetermined_subspace_update_rejected() {
        let ep = episode(20, 3, 5, 4, 1);
        let res = lrpr_altmin(&ep.measurements, 3, &BaselineConfig::default(), None);
        assert!(matches!(res, Err(PstError::RankDeficient(_))));
    }

    #[test]
    fn wf_zero_data_returns_zero() {
        let a = DMatrix::from_fn(6, 20, |i, j| ((i * 20 + j) as f64).cos());
        let x = wf_single(&a, &DVector::zeros(20), &BaselineConfig::default()).unwrap();
        assert_eq!(x, DVector::zeros(6));
    }

    #[test]
    fn wf_loss_never_increases() {
        let ep = episode(20, 1, 60, 1, 11);
        let (a, y) = (
            &ep.measurements.sensing[0],
            ep.measurements.magnitudes_at(0),
        );
        let mut losses = Vec::new();
        let config = BaselineConfig {
            max_iters: 50,
            ..BaselineConfig::default()
        };
        wf_path(a, &y, &config, |_, x| losses.push(wf_loss(a, &y, x))).unwrap();
        assert!(losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn wf_rejects_bad_step() {
        let a = DMatrix::identity(3, 3);
        let config = BaselineConfig {
            step_size: 0.0,
            ..BaselineConfig::default()
        };
        assert!(wf_single(&a, &DVector::from_element(3, 1.0), &config).is_err());
    }
}
