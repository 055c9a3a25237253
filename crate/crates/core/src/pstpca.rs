//! Subspace recovery after a detected change, given an estimate of the
//! previous subspace.
//!
//! The previous basis `Û` is kept fixed and augmented by one direction,
//! `Ũ = [Û, û_add]`. Initialization takes `û_add` as the top eigenvector of
//! the projected spectral matrix and each coefficient vector `b̃_t` from the
//! small matrix `Ũ' (1/m sum y^2 a a') Ũ`. The main loop then alternates
//!
//! 1. signs `Ĉ_t = sign(A_t' Ũ b̃_t)`,
//! 2. `û_add` from the least-squares fit of the residual
//!    `d_t = Ĉ_t y_t - A_t' Û b̃_{1:r,t}` against `A_t' u b̃_{r+1,t}`,
//! 3. `b̃_t = argmin_b ||Ĉ_t y_t - A_t' Ũ b||`,
//!
//! and the rank-`r` estimate is read off the top-`r` left singular vectors of
//! `Ũ B̃`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use crate::baselines::{lrpr_altmin, BaselineConfig, InitMode};
use crate::error::{PstError, Result};
use crate::linalg::{lstsq_qr, solve_spd, sorted_eigen, transposed, SensingGrams};
use crate::metrics::{norm_err, subspace_error};
use crate::model::{BasisMatrix, Episode, Measurements};
use crate::spectral::{build_yb, build_yu, project_out, top_eigenpair};

/// Default number of outer iterations.
pub const DEFAULT_T_MAX: usize = 12;
/// Default stopping tolerance on the change of `Ũ` between iterations.
pub const DEFAULT_DELTA_TOL: f64 = 1e-9;

/// Ground truth used only for per-iteration error traces and oracle stopping.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruth<'a> {
    pub u: &'a BasisMatrix,
    pub x: &'a DMatrix<f64>,
}

impl Episode {
    pub fn truth(&self) -> GroundTruth<'_> {
        GroundTruth {
            u: &self.u_true,
            x: &self.signals,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub se: Option<f64>,
    pub norm_err: Option<f64>,
    /// Wall-clock seconds since the algorithm started.
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub u_hat: BasisMatrix,
    /// `r x q`.
    pub b_hat: DMatrix<f64>,
    /// `n x q`, equal to `u_hat * b_hat`.
    pub x_hat: DMatrix<f64>,
    /// Entry 0 is the initialization; one entry per completed iteration after that.
    pub trace: Vec<TraceEntry>,
}

impl RecoveryResult {
    pub(crate) fn push_trace(
        &mut self,
        iteration: usize,
        started: Instant,
        truth: Option<GroundTruth<'_>>,
    ) -> Result<()> {
        let (se, ne) = match truth {
            Some(g) => (
                Some(subspace_error(&self.u_hat, g.u)?),
                Some(norm_err(g.x, &self.x_hat)?),
            ),
            None => (None, None),
        };
        self.trace.push(TraceEntry {
            iteration,
            se,
            norm_err: ne,
            seconds: started.elapsed().as_secs_f64(),
        });
        Ok(())
    }

    pub fn final_se(&self) -> Option<f64> {
        self.trace.last().and_then(|e| e.se)
    }

    pub fn final_norm_err(&self) -> Option<f64> {
        self.trace.last().and_then(|e| e.norm_err)
    }
}

/// Iterate of the augmented problem.
#[derive(Debug, Clone)]
pub struct AugmentedEstimate {
    /// `[Û, û_add]`, `n x (r+1)`.
    pub u_tilde: BasisMatrix,
    /// `(r+1) x q`.
    pub b_tilde: DMatrix<f64>,
    /// `m x q` signs in `{-1, +1}`.
    pub phases: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PstPcaOptions {
    pub t_max: usize,
    /// Stop once `||Ũ_new - Ũ_old||_F` (up to the sign of `û_add`) drops below this.
    pub delta_tol: f64,
    /// Stop once the subspace error to the supplied truth drops below this.
    pub stop_below_se: Option<f64>,
}

impl Default for PstPcaOptions {
    fn default() -> Self {
        Self {
            t_max: DEFAULT_T_MAX,
            delta_tol: DEFAULT_DELTA_TOL,
            stop_below_se: None,
        }
    }
}

fn check_prior(meas: &Measurements, u_prev_hat: &BasisMatrix) -> Result<()> {
    if meas.ambient_dim() != u_prev_hat.ambient_dim() {
        return Err(PstError::DimensionMismatch(format!(
            "measurements in R^{} against a basis in R^{}",
            meas.ambient_dim(),
            u_prev_hat.ambient_dim()
        )));
    }
    if u_prev_hat.rank() >= u_prev_hat.ambient_dim() {
        return Err(PstError::InvalidDimension(
            "previous subspace leaves no room for a new direction".into(),
        ));
    }
    Ok(())
}

/// Removes the `span(Û)` component of `v` and normalizes.
fn orthogonal_unit(v: DVector<f64>, u_prev_hat: &BasisMatrix) -> Result<DVector<f64>> {
    let u = u_prev_hat.matrix();
    let mut v = v;
    for _ in 0..2 {
        let coef = u.tr_mul(&v);
        v -= u * coef;
    }
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(PstError::DegenerateDirection(norm * norm));
    }
    Ok(v / norm)
}

fn with_column(u_prev_hat: &BasisMatrix, u_add: &DVector<f64>) -> Result<BasisMatrix> {
    let r = u_prev_hat.rank();
    let mut m = u_prev_hat.matrix().clone().insert_column(r, 0.0);
    m.set_column(r, u_add);
    BasisMatrix::with_tolerance(m, 1e-8)
}

/// Top eigenvector of `Ỹ_U`, re-orthogonalized against `Û` and normalized.
pub fn init_u_add(meas: &Measurements, u_prev_hat: &BasisMatrix) -> Result<DVector<f64>> {
    check_prior(meas, u_prev_hat)?;
    let tilde = project_out(&build_yu(meas)?, u_prev_hat)?;
    let (_, v) = top_eigenpair(&tilde)?;
    orthogonal_unit(v, u_prev_hat)
}

/// Top eigenvector of `Y_b`, scaled to norm `sqrt(mean(y^2))`.
pub fn init_coeffs(
    u_tilde: &BasisMatrix,
    sensing_t: &DMatrix<f64>,
    magnitudes_t: &DVector<f64>,
) -> Result<DVector<f64>> {
    let yb = build_yb(u_tilde, sensing_t, magnitudes_t)?;
    let scale = (magnitudes_t.norm_squared() / magnitudes_t.len() as f64).sqrt();
    if scale == 0.0 {
        return Ok(DVector::zeros(u_tilde.rank()));
    }
    let (_, v) = top_eigenpair(&yb)?;
    Ok(v * scale)
}

/// `sign(A_t' Ũ b̃_t)` with `sign(0) = +1`.
pub fn update_phase(
    u_tilde: &BasisMatrix,
    b_tilde_t: &DVector<f64>,
    sensing_t: &DMatrix<f64>,
) -> DVector<f64> {
    let x = u_tilde.matrix() * b_tilde_t;
    sensing_t
        .tr_mul(&x)
        .map(|z| if z < 0.0 { -1.0 } else { 1.0 })
}

/// Signs for every time at once, `m x q`.
pub fn phase_matrix(
    basis: &BasisMatrix,
    coeffs: &DMatrix<f64>,
    meas: &Measurements,
) -> DMatrix<f64> {
    let mut phases = DMatrix::zeros(meas.per_signal(), meas.len());
    for (t, a) in meas.sensing.iter().enumerate() {
        phases.set_column(t, &update_phase(basis, &coeffs.column(t).into_owned(), a));
    }
    phases
}

/// Sign-corrected measurements `Ĉ_t y_t` for one time.
pub(crate) fn signed_magnitudes(
    meas: &Measurements,
    phases: &DMatrix<f64>,
    t: usize,
) -> DVector<f64> {
    meas.magnitudes.column(t).component_mul(&phases.column(t))
}

/// `argmin_b ||Ĉ_t y_t - A_t' Ũ b||` via QR.
pub fn update_coeffs(
    u_tilde: &BasisMatrix,
    sensing_t: &DMatrix<f64>,
    magnitudes_t: &DVector<f64>,
    phases_t: &DVector<f64>,
) -> Result<DVector<f64>> {
    let design = sensing_t.tr_mul(u_tilde.matrix());
    lstsq_qr(
        design,
        &magnitudes_t.component_mul(phases_t),
        "coefficient update",
    )
}

/// Coefficient least squares for every time at once.
pub fn coeff_matrix(
    basis: &BasisMatrix,
    meas: &Measurements,
    phases: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let mut coeffs = DMatrix::zeros(basis.rank(), meas.len());
    for (t, a) in meas.sensing.iter().enumerate() {
        let b = update_coeffs(
            basis,
            a,
            &meas.magnitudes_at(t),
            &phases.column(t).into_owned(),
        )?;
        coeffs.set_column(t, &b);
    }
    Ok(coeffs)
}

/// `sum_t ||Ĉ_t y_t - A_t' V c_t||^2` for any `n x k` matrix `V`.
pub fn alt_min_loss(
    basis: &DMatrix<f64>,
    coeffs: &DMatrix<f64>,
    meas: &Measurements,
    phases: &DMatrix<f64>,
) -> f64 {
    meas.sensing
        .iter()
        .enumerate()
        .map(|(t, a)| {
            let fit = a.tr_mul(&(basis * coeffs.column(t)));
            (signed_magnitudes(meas, phases, t) - fit).norm_squared()
        })
        .sum()
}

/// Least-squares `û_add` before orthogonalization:
/// `(sum_t b̃_{r+1,t}^2 A_t A_t') u = sum_t b̃_{r+1,t} A_t d_t`.
pub fn solve_u_add_raw(
    meas: &Measurements,
    phases: &DMatrix<f64>,
    u_prev_hat: &BasisMatrix,
    b_tilde: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    solve_u_add_cached(meas, phases, u_prev_hat, b_tilde, None)
}

fn solve_u_add_cached(
    meas: &Measurements,
    phases: &DMatrix<f64>,
    u_prev_hat: &BasisMatrix,
    b_tilde: &DMatrix<f64>,
    grams: Option<&SensingGrams>,
) -> Result<DVector<f64>> {
    check_prior(meas, u_prev_hat)?;
    let (n, r) = (u_prev_hat.ambient_dim(), u_prev_hat.rank());
    if b_tilde.shape() != (r + 1, meas.len()) || phases.shape() != meas.magnitudes.shape() {
        return Err(PstError::DimensionMismatch(
            "coefficients or phases do not match the measurements".into(),
        ));
    }
    let last = b_tilde.row(r);
    let weight = last.norm_squared();
    if weight == 0.0 || weight <= 1e-20 * b_tilde.norm_squared() {
        return Err(PstError::DegenerateDirection(weight));
    }
    let fixed = u_prev_hat.matrix() * b_tilde.rows(0, r);
    let mut normal = match grams {
        Some(cache) => cache.weighted_sum(&last.transpose().map(|w| w * w)),
        None => DMatrix::zeros(n, n),
    };
    let mut rhs = DVector::zeros(n);
    for (t, a) in meas.sensing.iter().enumerate() {
        let w = last[t];
        if w == 0.0 {
            continue;
        }
        let d = signed_magnitudes(meas, phases, t) - a.tr_mul(&fixed.column(t));
        if grams.is_none() {
            normal.gemm(w * w, a, &transposed(a), 1.0);
        }
        rhs.gemv(w, a, &d, 1.0);
    }
    solve_spd(normal, &rhs, "added-direction update")
}

/// Least-squares `û_add`, projected off `span(Û)` and normalized.
pub fn update_u_add(
    meas: &Measurements,
    phases: &DMatrix<f64>,
    u_prev_hat: &BasisMatrix,
    b_tilde: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    orthogonal_unit(
        solve_u_add_raw(meas, phases, u_prev_hat, b_tilde)?,
        u_prev_hat,
    )
}

/// Ordered left singular vectors of `b` (`k x q`), completed to `k` columns.
fn left_singular_vectors(b: &DMatrix<f64>) -> DMatrix<f64> {
    let k = b.nrows();
    if b.ncols() >= k {
        let svd = b.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        DMatrix::from_columns(
            &order
                .iter()
                .map(|&i| u.column(i).into_owned())
                .collect::<Vec<_>>(),
        )
    } else {
        sorted_eigen(&(b * b.transpose())).1
    }
}

/// Rank-`r` estimate from `X̃ = Ũ B̃`: `Û_j` = top-`r` left singular vectors of
/// `X̃`, `B̂_j = Û_j' X̃`, `X̂_j = Û_j B̂_j`. Since `Ũ` is orthonormal these come
/// from the SVD of the small matrix `B̃`.
pub fn finalize(u_tilde: &BasisMatrix, b_tilde: &DMatrix<f64>, r: usize) -> Result<RecoveryResult> {
    if b_tilde.nrows() != u_tilde.rank() {
        return Err(PstError::DimensionMismatch(format!(
            "{} coefficient rows for a rank-{} basis",
            b_tilde.nrows(),
            u_tilde.rank()
        )));
    }
    if r == 0 || r > u_tilde.rank() {
        return Err(PstError::InvalidDimension(format!(
            "cannot keep {r} of {} directions",
            u_tilde.rank()
        )));
    }
    let p = left_singular_vectors(b_tilde).columns(0, r).into_owned();
    let u_hat = BasisMatrix::with_tolerance(u_tilde.matrix() * &p, 1e-8)?;
    let b_hat = p.tr_mul(b_tilde);
    let x_hat = u_hat.matrix() * &b_hat;
    Ok(RecoveryResult {
        u_hat,
        b_hat,
        x_hat,
        trace: Vec::new(),
    })
}

/// Spectral initialization: `û_add` from `Ỹ_U`, then one `b̃_t` per time from `Y_b`.
pub fn initialize(meas: &Measurements, u_prev_hat: &BasisMatrix) -> Result<AugmentedEstimate> {
    let u_add = init_u_add(meas, u_prev_hat)?;
    let u_tilde = with_column(u_prev_hat, &u_add)?;
    let mut b_tilde = DMatrix::zeros(u_tilde.rank(), meas.len());
    for (t, a) in meas.sensing.iter().enumerate() {
        b_tilde.set_column(t, &init_coeffs(&u_tilde, a, &meas.magnitudes_at(t))?);
    }
    let phases = phase_matrix(&u_tilde, &b_tilde, meas);
    Ok(AugmentedEstimate {
        u_tilde,
        b_tilde,
        phases,
    })
}

/// One outer iteration: phases, added direction, coefficients. Returns the
/// change in `û_add` (sign-invariant); zero when the added-direction
/// coefficients have vanished and `û_add` is kept.
pub fn iterate(
    est: &mut AugmentedEstimate,
    meas: &Measurements,
    u_prev_hat: &BasisMatrix,
) -> Result<f64> {
    iterate_cached(est, meas, u_prev_hat, None)
}

fn iterate_cached(
    est: &mut AugmentedEstimate,
    meas: &Measurements,
    u_prev_hat: &BasisMatrix,
    grams: Option<&SensingGrams>,
) -> Result<f64> {
    let r = u_prev_hat.rank();
    est.phases = phase_matrix(&est.u_tilde, &est.b_tilde, meas);
    let old = est.u_tilde.column(r);
    let raw = solve_u_add_cached(meas, &est.phases, u_prev_hat, &est.b_tilde, grams);
    let delta = match raw.and_then(|u| orthogonal_unit(u, u_prev_hat)) {
        Ok(u_add) => {
            let delta = (&u_add - &old).norm().min((&u_add + &old).norm());
            est.u_tilde = with_column(u_prev_hat, &u_add)?;
            delta
        }
        Err(PstError::DegenerateDirection(_)) => 0.0,
        Err(e) => return Err(e),
    };
    est.b_tilde = coeff_matrix(&est.u_tilde, meas, &est.phases)?;
    Ok(delta)
}

/// Full recovery: initialization, up to `t_max` outer iterations, rank-`r` finalization.
pub fn run_pst_pca(
    meas: &Measurements,
    u_prev_hat: &BasisMatrix,
    opts: &PstPcaOptions,
    truth: Option<GroundTruth<'_>>,
) -> Result<RecoveryResult> {
    let started = Instant::now();
    let r = u_prev_hat.rank();
    if meas.per_signal() < r + 1 {
        return Err(PstError::RankDeficient(format!(
            "{} measurements per signal cannot determine {} coefficients",
            meas.per_signal(),
            r + 1
        )));
    }
    let mut est = initialize(meas, u_prev_hat)?;
    let grams = SensingGrams::build(&meas.sensing);
    let mut result = finalize(&est.u_tilde, &est.b_tilde, r)?;
    result.push_trace(0, started, truth)?;
    let mut trace = std::mem::take(&mut result.trace);

    for iteration in 1..=opts.t_max {
        if reached(&trace, opts.stop_below_se) {
            break;
        }
        let delta = iterate_cached(&mut est, meas, u_prev_hat, grams.as_ref())?;
        result = finalize(&est.u_tilde, &est.b_tilde, r)?;
        result.trace = trace;
        result.push_trace(iteration, started, truth)?;
        trace = std::mem::take(&mut result.trace);
        if delta < opts.delta_tol {
            break;
        }
    }
    result.trace = trace;
    Ok(result)
}

fn reached(trace: &[TraceEntry], target: Option<f64>) -> bool {
    match (target, trace.last().and_then(|e| e.se)) {
        (Some(target), Some(se)) => se < target,
        _ => false,
    }
}

/// A few full-subspace alternating-minimization iterations warm-started at a
/// recovery result. Removes the error floor set by the fixed previous basis.
pub fn refine_with_lrpr(
    recovery: &RecoveryResult,
    meas: &Measurements,
    iterations: usize,
    truth: Option<GroundTruth<'_>>,
) -> Result<RecoveryResult> {
    if iterations == 0 {
        return Err(PstError::InvalidConfig(
            "refinement needs at least one iteration".into(),
        ));
    }
    let config = BaselineConfig {
        max_iters: iterations,
        init_mode: InitMode::WarmStart {
            u: recovery.u_hat.clone(),
            b: recovery.b_hat.clone(),
        },
        ..BaselineConfig::default()
    };
    lrpr_altmin(meas, recovery.u_hat.rank(), &config, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_subspace, rotate_one_direction, seeded_rng, Episode};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn gauss(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = seeded_rng(seed, 99);
        DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn changed_episode(
        n: usize,
        r: usize,
        m: usize,
        q: usize,
        theta_deg: f64,
        seed: u64,
    ) -> (BasisMatrix, Episode, DVector<f64>) {
        let u0 = generate_subspace(n, r, &mut seeded_rng(seed, 0)).unwrap();
        let (u1, ev) =
            rotate_one_direction(&u0, theta_deg.to_radians(), r - 1, &mut seeded_rng(seed, 1))
                .unwrap();
        let ep = Episode::generate(
            u1,
            q,
            m,
            &DVector::from_element(r, 1.0),
            &mut seeded_rng(seed, 2),
        )
        .unwrap();
        (u0, ep, ev.u_add)
    }

    #[test]
    fn zero_magnitudes_give_zero_coefficients() {
        let u = BasisMatrix::new(DMatrix::identity(5, 2)).unwrap();
        let a = DMatrix::from_fn(5, 7, |i, j| (i as f64 - j as f64).sin());
        assert_eq!(
            init_coeffs(&u, &a, &DVector::zeros(7)).unwrap(),
            DVector::zeros(2)
        );
        let signs = DVector::from_element(7, 1.0);
        assert!(
            update_coeffs(&u, &a, &DVector::zeros(7), &signs)
                .unwrap()
                .amax()
                <= 1e-15
        );
    }

    #[test]
    fn init_coefficient_norm_is_rms_magnitude() {
        let u = BasisMatrix::new(DMatrix::identity(6, 3)).unwrap();
        let a = gauss(6, 9, 1);
        let y = DVector::from_fn(9, |i, _| 0.5 + i as f64);
        let b = init_coeffs(&u, &a, &y).unwrap();
        assert!((b.norm() - (y.norm_squared() / 9.0).sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn phase_conventions() {
        let u = BasisMatrix::new(DMatrix::identity(4, 2)).unwrap();
        let a = DMatrix::from_fn(4, 6, |i, j| (i as f64 + 1.0) * (j as f64 - 2.5));
        assert!(update_phase(&u, &DVector::zeros(2), &a)
            .iter()
            .all(|&s| s == 1.0));

        let b = DVector::from_vec(vec![0.7, -1.3]);
        let x = u.matrix() * &b;
        let z = a.tr_mul(&x);
        let c = update_phase(&u, &b, &a);
        assert_eq!(c.component_mul(&z.abs()), z);
        let flipped = update_phase(&u, &(-&b), &a);
        for (s, f) in c.iter().zip(flipped.iter()) {
            assert_eq!(*s, -*f);
        }
    }

    #[test]
    fn consistent_coefficient_system_is_solved_exactly() {
        let u = generate_subspace(10, 3, &mut seeded_rng(4, 0)).unwrap();
        let a = gauss(10, 12, 2);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.25]);
        let z = a.tr_mul(&(u.matrix() * &b));
        let signs = z.map(|v| if v < 0.0 { -1.0 } else { 1.0 });
        let got = update_coeffs(&u, &a, &z.abs(), &signs).unwrap();
        assert!((got - b).amax() <= 1e-10);
    }

    #[test]
    fn underdetermined_coefficients_rejected() {
        let u = BasisMatrix::new(DMatrix::identity(5, 3)).unwrap();
        let a = DMatrix::from_element(5, 3 - 1, 1.0);
        let r = update_coeffs(&u, &a, &DVector::zeros(2), &DVector::from_element(2, 1.0));
        assert!(matches!(r, Err(PstError::RankDeficient(_))));
    }

    #[test]
    fn vanishing_added_coefficients_are_degenerate() {
        let (u0, ep, _) = changed_episode(12, 2, 20, 5, 30.0, 9);
        let b = DMatrix::from_fn(3, 5, |k, t| if k == 2 { 0.0 } else { 1.0 + t as f64 });
        let phases = DMatrix::from_element(20, 5, 1.0);
        assert!(matches!(
            update_u_add(&ep.measurements, &phases, &u0, &b),
            Err(PstError::DegenerateDirection(_))
        ));
    }

    #[test]
    fn noiseless_u_add_update_recovers_added_direction() {
        // with true signs and true augmented coefficients the true u_add has zero residual
        let (n, r, m, q) = (30, 3, 40, 4);
        let (u0, ep, u_add) = changed_episode(n, r, m, q, 40.0, 17);
        assert!(m * q >= 2 * n);
        let u_tilde = with_column(&u0, &u_add).unwrap();
        let b_tilde = u_tilde.matrix().tr_mul(&ep.signals);
        let phases = phase_matrix(&u_tilde, &b_tilde, &ep.measurements);
        let u = update_u_add(&ep.measurements, &phases, &u0, &b_tilde).unwrap();
        assert!(u.dot(&u_add).abs() >= (1e-6f64).cos());
    }

    #[test]
    fn finalize_rank_structure() {
        let u_tilde = generate_subspace(15, 4, &mut seeded_rng(3, 0)).unwrap();
        let mut b = gauss(4, 9, 3);
        b.row_mut(3).fill(0.0);
        let res = finalize(&u_tilde, &b, 3).unwrap();
        let prev = BasisMatrix::new(u_tilde.matrix().columns(0, 3).into_owned()).unwrap();
        assert!(subspace_error(&res.u_hat, &prev).unwrap() <= 1e-8);
        assert!((&res.x_hat - u_tilde.matrix() * &b).amax() <= 1e-8);
        assert!(finalize(&u_tilde, &b, 5).is_err());
    }

    #[test]
    fn finalize_with_fewer_signals_than_directions() {
        let u_tilde = generate_subspace(10, 4, &mut seeded_rng(8, 0)).unwrap();
        let b = DMatrix::from_fn(4, 2, |k, t| (k + 3 * t) as f64 - 2.0);
        let res = finalize(&u_tilde, &b, 3).unwrap();
        assert!(res.u_hat.orthonormality_defect() <= 1e-8);
        assert!((&res.x_hat - u_tilde.matrix() * &b).amax() <= 1e-8);
    }

    #[test]
    fn no_change_with_exact_prior_recovers_subspace() {
        let (n, r, m, q) = (40, 3, 150, 30);
        let u0 = generate_subspace(n, r, &mut seeded_rng(21, 0)).unwrap();
        let ep = Episode::generate(
            u0.clone(),
            q,
            m,
            &DVector::from_element(r, 1.0),
            &mut seeded_rng(21, 2),
        )
        .unwrap();
        let res = run_pst_pca(
            &ep.measurements,
            &u0,
            &PstPcaOptions::default(),
            Some(ep.truth()),
        )
        .unwrap();
        assert!(res.final_se().unwrap() <= 1e-6, "trace = {:?}", res.trace);
    }

    #[test]
    fn trace_starts_at_initialization() {
        let (u0, ep, _) = changed_episode(30, 2, 60, 30, 45.0, 5);
        let opts = PstPcaOptions {
            t_max: 0,
            ..PstPcaOptions::default()
        };
        let res = run_pst_pca(&ep.measurements, &u0, &opts, Some(ep.truth())).unwrap();
        assert_eq!(res.trace.len(), 1);
        assert_eq!(res.trace[0].iteration, 0);
        let res = run_pst_pca(&ep.measurements, &u0, &PstPcaOptions::default(), None).unwrap();
        assert!(res
            .trace
            .iter()
            .all(|e| e.se.is_none() && e.norm_err.is_none()));
    }

    #[test]
    fn too_few_measurements_rejected() {
        let (u0, ep, _) = changed_episode(20, 3, 3, 10, 30.0, 2);
        let err = run_pst_pca(&ep.measurements, &u0, &PstPcaOptions::default(), None);
        assert!(matches!(err, Err(PstError::RankDeficient(_))));
    }
}
