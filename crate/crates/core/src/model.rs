//! Synthetic data: piecewise-constant subspaces that rotate one direction at a
//! time, Gaussian coefficient sequences, and magnitude-only Gaussian
//! measurements.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{PstError, Result};
use crate::linalg::{orthonormality_defect, orthonormalize};
use crate::metrics::subspace_error;

/// Tolerance used when validating a [`BasisMatrix`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Random source for stream `stream` of a seed. Independent streams of one
/// seed let different parts of a Monte-Carlo run share draws across settings.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// An `n x r` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix(DMatrix<f64>);

impl BasisMatrix {
    /// Wraps `m`, checking that its columns are orthonormal to [`ORTHONORMAL_TOL`].
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(m, ORTHONORMAL_TOL)
    }

    pub fn with_tolerance(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if m.ncols() == 0 || m.ncols() > m.nrows() {
            return Err(PstError::InvalidDimension(format!(
                "basis must satisfy 1 <= r <= n, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let defect = orthonormality_defect(&m);
        if defect > tol {
            return Err(PstError::NotOrthonormal(defect));
        }
        Ok(Self(m))
    }

    /// Orthonormalizes the columns of `m` by QR (positive diagonal of `R`).
    pub fn orthonormalized(m: DMatrix<f64>) -> Result<Self> {
        if m.ncols() == 0 || m.ncols() > m.nrows() {
            return Err(PstError::InvalidDimension(format!(
                "cannot orthonormalize a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(orthonormalize(m)))
    }

    pub fn from_column(v: &DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0) {
            return Err(PstError::InvalidDimension("zero vector has no span".into()));
        }
        Self::new(DMatrix::from_column_slice(
            v.len(),
            1,
            (v / norm).as_slice(),
        ))
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn column(&self, k: usize) -> DVector<f64> {
        self.0.column(k).into_owned()
    }

    /// `[self, v]`, orthonormalized.
    pub fn augmented(&self, v: &DVector<f64>) -> Result<Self> {
        let mut m = self.0.clone().insert_column(self.rank(), 0.0);
        m.set_column(self.rank(), v);
        Self::orthonormalized(m)
    }

    /// Largest entry of `|U'U - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        orthonormality_defect(&self.0)
    }
}

/// Geometry of one single-direction subspace change.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeEvent {
    /// Direction of the previous subspace that changes.
    pub u_chg: DVector<f64>,
    /// Its rotated version, which belongs to the new subspace.
    pub u_chd: DVector<f64>,
    /// Unit direction orthogonal to the previous subspace that enters the new one.
    pub u_add: DVector<f64>,
    /// Unit direction of the previous subspace that leaves.
    pub u_del: DVector<f64>,
    /// Rotation angle in radians.
    pub theta: f64,
    /// Column index of `u_chg` in the previous basis (and of `u_chd` in the new one).
    pub chg_index: usize,
}

/// Magnitude-only measurements of a block of `q` signals.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurements {
    /// One `n x m` matrix per time, columns are the measurement vectors `a_{i,t}`.
    pub sensing: Vec<DMatrix<f64>>,
    /// `m x q`, entry `(i, t)` is `|<a_{i,t}, x_t>|`.
    pub magnitudes: DMatrix<f64>,
}

impl Measurements {
    pub fn new(sensing: Vec<DMatrix<f64>>, magnitudes: DMatrix<f64>) -> Result<Self> {
        let q = sensing.len();
        if q == 0 {
            return Err(PstError::EmptyInput("no measurement times".into()));
        }
        let (n, m) = sensing[0].shape();
        if sensing.iter().any(|a| a.shape() != (n, m)) {
            return Err(PstError::DimensionMismatch(
                "sensing matrices differ in shape".into(),
            ));
        }
        if magnitudes.shape() != (m, q) {
            return Err(PstError::DimensionMismatch(format!(
                "magnitudes are {:?}, expected ({m}, {q})",
                magnitudes.shape()
            )));
        }
        Ok(Self {
            sensing,
            magnitudes,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.sensing[0].nrows()
    }

    pub fn per_signal(&self) -> usize {
        self.sensing[0].ncols()
    }

    pub fn len(&self) -> usize {
        self.sensing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sensing.is_empty()
    }

    pub fn magnitudes_at(&self, t: usize) -> DVector<f64> {
        self.magnitudes.column(t).into_owned()
    }
}

/// All data for one constant-subspace interval.
#[derive(Debug, Clone)]
pub struct Episode {
    pub u_true: BasisMatrix,
    /// `r x q`, one coefficient vector per time.
    pub coeffs: DMatrix<f64>,
    /// `n x q`, equal to `u_true * coeffs`.
    pub signals: DMatrix<f64>,
    pub measurements: Measurements,
    pub lambda_bar: DVector<f64>,
}

impl Episode {
    /// Draws coefficients and measurements for `q` signals in `span(u_true)`.
    pub fn generate<R: Rng + ?Sized>(
        u_true: BasisMatrix,
        q: usize,
        m: usize,
        lambda_bar: &DVector<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        let coeffs = generate_coefficients(u_true.rank(), q, lambda_bar, rng)?;
        let signals = u_true.matrix() * &coeffs;
        let measurements = measure(&signals, m, rng)?;
        Ok(Self {
            u_true,
            coeffs,
            signals,
            measurements,
            lambda_bar: lambda_bar.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.signals.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.ncols() == 0
    }
}

/// Draws an episode without storing the sensing matrices; each `(t, A_t, y_t)`
/// is handed to `sink` as it is produced. Consumes the random source exactly
/// like [`Episode::generate`], so both produce the same data for a given seed.
pub fn stream_episode<R, F>(
    u_true: &BasisMatrix,
    q: usize,
    m: usize,
    lambda_bar: &DVector<f64>,
    rng: &mut R,
    mut sink: F,
) -> Result<DMatrix<f64>>
where
    R: Rng + ?Sized,
    F: FnMut(usize, &DMatrix<f64>, &DVector<f64>),
{
    let coeffs = generate_coefficients(u_true.rank(), q, lambda_bar, rng)?;
    let signals = u_true.matrix() * &coeffs;
    check_measure_dims(&signals, m)?;
    for t in 0..q {
        let a = gaussian_matrix(signals.nrows(), m, rng);
        let y = a.tr_mul(&signals.column(t)).abs();
        sink(t, &a, &y);
    }
    Ok(signals)
}

/// Orthonormalization of an i.i.d. standard-normal `n x r` matrix.
pub fn generate_subspace<R: Rng + ?Sized>(n: usize, r: usize, rng: &mut R) -> Result<BasisMatrix> {
    if r < 1 || r > n {
        return Err(PstError::InvalidDimension(format!(
            "need 1 <= r <= n, got n={n}, r={r}"
        )));
    }
    BasisMatrix::orthonormalized(gaussian_matrix(n, r, rng))
}

/// Unit vector drawn uniformly from the orthogonal complement of `span(u)`.
fn complement_direction<R: Rng + ?Sized>(u: &BasisMatrix, rng: &mut R) -> DVector<f64> {
    let n = u.ambient_dim();
    let mut g: DVector<f64> = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
    // two passes keep the residual orthogonal to working precision
    for _ in 0..2 {
        let coef = u.matrix().tr_mul(&g);
        g -= u.matrix() * coef;
    }
    let norm = g.norm();
    g / norm
}

/// Rotates column `chg_index` of `u_prev` by `theta` towards a random direction
/// of the orthogonal complement, returning the new basis and the change geometry.
pub fn rotate_one_direction<R: Rng + ?Sized>(
    u_prev: &BasisMatrix,
    theta: f64,
    chg_index: usize,
    rng: &mut R,
) -> Result<(BasisMatrix, ChangeEvent)> {
    let (n, r) = (u_prev.ambient_dim(), u_prev.rank());
    if n == r {
        return Err(PstError::InvalidDimension(
            "subspace fills the ambient space; no orthogonal direction to add".into(),
        ));
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(PstError::InvalidConfig(format!(
            "rotation angle {theta} outside [0, pi/2]"
        )));
    }
    if chg_index >= r {
        return Err(PstError::InvalidConfig(format!(
            "change index {chg_index} >= rank {r}"
        )));
    }
    let u_chg = u_prev.column(chg_index);
    let u_add = complement_direction(u_prev, rng);
    let (sin, cos) = theta.sin_cos();
    let u_chd = &u_add * sin + &u_chg * cos;
    let u_del = &u_chg * sin - &u_add * cos;

    let mut next = u_prev.matrix().clone();
    next.set_column(chg_index, &u_chd);
    let u_next = BasisMatrix::orthonormalized(next)?;
    Ok((
        u_next,
        ChangeEvent {
            u_chg,
            u_chd,
            u_add,
            u_del,
            theta,
            chg_index,
        },
    ))
}

fn check_lambda(lambda_bar: &DVector<f64>) -> Result<()> {
    match lambda_bar.iter().find(|&&l| !(l > 0.0 && l.is_finite())) {
        Some(bad) => Err(PstError::InvalidConfig(format!(
            "coefficient variance {bad} must be positive"
        ))),
        None => Ok(()),
    }
}

/// `r x q` matrix of independent zero-mean Gaussians, row `k` with variance `lambda_bar[k]`.
pub fn generate_coefficients<R: Rng + ?Sized>(
    r: usize,
    q: usize,
    lambda_bar: &DVector<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if lambda_bar.len() != r {
        return Err(PstError::DimensionMismatch(format!(
            "lambda_bar has {} entries for rank {r}",
            lambda_bar.len()
        )));
    }
    check_lambda(lambda_bar)?;
    let sd = lambda_bar.map(f64::sqrt);
    Ok(DMatrix::from_fn(r, q, |k, _| {
        sd[k] * rng.sample::<f64, _>(StandardNormal)
    }))
}

fn check_measure_dims(signals: &DMatrix<f64>, m: usize) -> Result<()> {
    if m < 1 {
        return Err(PstError::InvalidDimension(
            "need at least one measurement per signal".into(),
        ));
    }
    if signals.nrows() == 0 || signals.ncols() == 0 {
        return Err(PstError::EmptyInput("no signals to measure".into()));
    }
    Ok(())
}

/// Standard-normal measurement vectors and magnitudes `|a_{i,t} . x_t|`.
pub fn measure<R: Rng + ?Sized>(
    signals: &DMatrix<f64>,
    m: usize,
    rng: &mut R,
) -> Result<Measurements> {
    check_measure_dims(signals, m)?;
    let (n, q) = signals.shape();
    let mut sensing = Vec::with_capacity(q);
    let mut magnitudes = DMatrix::zeros(m, q);
    for t in 0..q {
        let a = gaussian_matrix(n, m, rng);
        magnitudes.set_column(t, &a.tr_mul(&signals.column(t)).abs());
        sensing.push(a);
    }
    Ok(Measurements {
        sensing,
        magnitudes,
    })
}

/// Noisy copy of `u_true` with `SE(result, u_true)` close to `target_se`
/// (always within `[0.5, 2] * target_se`).
pub fn perturb_subspace<R: Rng + ?Sized>(
    u_true: &BasisMatrix,
    target_se: f64,
    rng: &mut R,
) -> Result<BasisMatrix> {
    if !(0.0..1.0).contains(&target_se) {
        return Err(PstError::InvalidConfig(format!(
            "target subspace error {target_se} outside [0, 1)"
        )));
    }
    if target_se == 0.0 {
        return Ok(u_true.clone());
    }
    let (n, r) = (u_true.ambient_dim(), u_true.rank());
    let noise = gaussian_matrix(n, r, rng);
    let mut scale = target_se / (n as f64).sqrt();
    let mut best: Option<(f64, BasisMatrix)> = None;
    for _ in 0..60 {
        let candidate = BasisMatrix::orthonormalized(u_true.matrix() + &noise * scale)?;
        let se = subspace_error(&candidate, u_true)?;
        let miss = (se / target_se).ln().abs();
        if best.as_ref().is_none_or(|(b, _)| miss < *b) {
            best = Some((miss, candidate));
        }
        if miss < 0.01 {
            break;
        }
        scale *= if se > 0.0 {
            (target_se / se).min(10.0)
        } else {
            10.0
        };
    }
    match best {
        Some((miss, basis)) if miss <= 2f64.ln() => Ok(basis),
        _ => Err(PstError::InvalidConfig(format!(
            "could not perturb to subspace error {target_se}"
        ))),
    }
}

/// JSON description of a tracking scenario. Sensing matrices are regenerated
/// from `seed` rather than stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    /// Length of the final episode (the one starting at the last change time).
    pub q: usize,
    /// One angle per change time, or a single angle used for every change.
    pub theta_degrees: Vec<f64>,
    pub change_times: Vec<usize>,
    pub lambda_bar: Vec<f64>,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| PstError::InvalidConfig(e.to_string()))
    }

    fn angle(&self, j: usize) -> Result<f64> {
        match self.theta_degrees.as_slice() {
            [one] => Ok(one.to_radians()),
            all if all.len() == self.change_times.len() => Ok(all[j].to_radians()),
            all => Err(PstError::InvalidConfig(format!(
                "{} angles for {} change times",
                all.len(),
                self.change_times.len()
            ))),
        }
    }
}

/// A sequence of episodes separated by single-direction changes.
#[derive(Debug, Clone)]
pub struct TrackingScenario {
    pub episodes: Vec<Episode>,
    pub change_events: Vec<ChangeEvent>,
    /// Largest subspace error between consecutive episodes. Recorded, not enforced.
    pub delta_bound: f64,
    pub change_times: Vec<usize>,
}

impl TrackingScenario {
    /// Episode `j` covers `[t_j, t_{j+1})` with `t_0 = 0` and the last episode
    /// holding `spec.q` signals. Every change rotates the last column.
    pub fn generate(spec: &ScenarioSpec) -> Result<Self> {
        let times = &spec.change_times;
        if times.first() == Some(&0) || times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(PstError::InvalidConfig(
                "change times must be positive and increasing".into(),
            ));
        }
        if spec.q == 0 {
            return Err(PstError::InvalidConfig(
                "final episode must hold at least one signal".into(),
            ));
        }
        let lambda_bar = DVector::from_vec(spec.lambda_bar.clone());
        check_lambda(&lambda_bar)?;
        let mut rng = seeded_rng(spec.seed, 0);
        let mut basis = generate_subspace(spec.n, spec.r, &mut rng)?;
        let mut bounds = vec![0];
        bounds.extend_from_slice(times);
        bounds.push(times.last().copied().unwrap_or(0) + spec.q);

        let mut episodes = Vec::with_capacity(bounds.len() - 1);
        let mut change_events = Vec::with_capacity(times.len());
        let mut delta_bound = 0.0f64;
        for j in 0..bounds.len() - 1 {
            if j > 0 {
                let (next, event) =
                    rotate_one_direction(&basis, spec.angle(j - 1)?, spec.r - 1, &mut rng)?;
                delta_bound = delta_bound.max(subspace_error(&basis, &next)?);
                change_events.push(event);
                basis = next;
            }
            let len = bounds[j + 1] - bounds[j];
            episodes.push(Episode::generate(
                basis.clone(),
                len,
                spec.m,
                &lambda_bar,
                &mut rng,
            )?);
        }
        Ok(Self {
            episodes,
            change_events,
            delta_bound,
            change_times: times.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn rng(seed: u64) -> ChaCha8Rng {
        seeded_rng(seed, 0)
    }

    #[test]
    fn square_subspace_is_orthogonal() {
        let u = generate_subspace(4, 4, &mut rng(3)).unwrap();
        assert!(u.orthonormality_defect() <= 1e-10);
        assert!((u.matrix().determinant().abs() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn subspace_generation_is_deterministic() {
        let a = generate_subspace(1000, 10, &mut rng(11)).unwrap();
        let b = generate_subspace(1000, 10, &mut rng(11)).unwrap();
        assert_eq!(a, b);
        let u = generate_subspace(50, 5, &mut rng(2)).unwrap();
        assert!(subspace_error(&u, &u).unwrap() <= 1e-12);
    }

    #[test]
    fn invalid_rank_rejected() {
        assert!(matches!(
            generate_subspace(3, 4, &mut rng(0)),
            Err(PstError::InvalidDimension(_))
        ));
        assert!(matches!(
            generate_subspace(3, 0, &mut rng(0)),
            Err(PstError::InvalidDimension(_))
        ));
    }

    #[test]
    fn zero_rotation_keeps_subspace() {
        let u = generate_subspace(30, 4, &mut rng(5)).unwrap();
        let (v, _) = rotate_one_direction(&u, 0.0, 3, &mut rng(6)).unwrap();
        assert!(subspace_error(&v, &u).unwrap() <= 1e-10);
    }

    #[test]
    fn right_angle_rotation_swaps_in_added_direction() {
        let u = generate_subspace(30, 4, &mut rng(5)).unwrap();
        let (_, ev) = rotate_one_direction(&u, FRAC_PI_2, 3, &mut rng(6)).unwrap();
        assert!((&ev.u_chd - &ev.u_add).amax() <= 1e-10);
    }

    #[test]
    fn thirty_degree_rotation_has_sine_half() {
        let u = generate_subspace(40, 5, &mut rng(8)).unwrap();
        let (_, ev) = rotate_one_direction(&u, 30f64.to_radians(), 4, &mut rng(9)).unwrap();
        let chg = BasisMatrix::from_column(&ev.u_chg).unwrap();
        let chd = BasisMatrix::from_column(&ev.u_chd).unwrap();
        assert!((subspace_error(&chg, &chd).unwrap() - 0.5).abs() <= 1e-8);
    }

    #[test]
    fn full_rank_basis_cannot_rotate() {
        let u = generate_subspace(3, 3, &mut rng(1)).unwrap();
        assert!(matches!(
            rotate_one_direction(&u, 0.3, 0, &mut rng(1)),
            Err(PstError::InvalidDimension(_))
        ));
    }

    #[test]
    fn coefficient_covariance_concentrates() {
        let lambda = DVector::from_vec(vec![1.0, 1.0]);
        let b = generate_coefficients(2, 100_000, &lambda, &mut rng(4)).unwrap();
        // oracle: direct sample covariance
        let cov = &b * b.transpose() / 100_000.0;
        let dev = cov - DMatrix::<f64>::identity(2, 2);
        assert!(dev.svd(false, false).singular_values.max() <= 0.05);

        let four = DVector::from_vec(vec![4.0]);
        let mut r = rng(10);
        let mean_sq: f64 = (0..100_000)
            .map(|_| generate_coefficients(1, 1, &four, &mut r).unwrap()[(0, 0)].powi(2))
            .sum::<f64>()
            / 1e5;
        assert!((mean_sq - 4.0).abs() <= 0.2);
    }

    #[test]
    fn zero_variance_rejected() {
        let lambda = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(
            generate_coefficients(2, 3, &lambda, &mut rng(0)),
            Err(PstError::InvalidConfig(_))
        ));
    }

    #[test]
    fn measurements_of_zero_signal_vanish() {
        let x = DMatrix::zeros(6, 3);
        let meas = measure(&x, 10, &mut rng(1)).unwrap();
        assert!(meas.magnitudes.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn measurements_are_absolutely_homogeneous() {
        let x = DMatrix::from_fn(8, 2, |i, j| (i as f64 - 3.0) * (j as f64 + 1.0));
        let base = measure(&x, 20, &mut rng(7)).unwrap();
        let scaled = measure(&(&x * 2.5), 20, &mut rng(7)).unwrap();
        assert_eq!(base.sensing, scaled.sensing);
        for (a, b) in base.magnitudes.iter().zip(scaled.magnitudes.iter()) {
            assert!((2.5 * a - b).abs() <= 1e-12 * b.max(1.0));
        }
        let flipped = measure(&(-&x), 20, &mut rng(7)).unwrap();
        assert_eq!(base.magnitudes, flipped.magnitudes);
    }

    #[test]
    fn mean_square_magnitude_matches_energy() {
        let x = DMatrix::from_column_slice(5, 1, &[1.0, -2.0, 0.5, 0.0, 3.0]);
        let meas = measure(&x, 100_000, &mut rng(21)).unwrap();
        let avg = meas.magnitudes.iter().map(|y| y * y).sum::<f64>() / 1e5;
        let energy = x.norm_squared();
        assert!((avg - energy).abs() <= 0.05 * energy);
    }

    #[test]
    fn perturbation_hits_target_window() {
        let u = generate_subspace(100, 5, &mut rng(30)).unwrap();
        let same = perturb_subspace(&u, 0.0, &mut rng(31)).unwrap();
        assert!(subspace_error(&same, &u).unwrap() <= 1e-12);

        let p = perturb_subspace(&u, 1e-4, &mut rng(31)).unwrap();
        let se = subspace_error(&p, &u).unwrap();
        assert!((5e-5..=2e-4).contains(&se), "se = {se}");
        assert!(p.orthonormality_defect() <= 1e-10);
        assert!(matches!(
            perturb_subspace(&u, 1.0, &mut rng(0)),
            Err(PstError::InvalidConfig(_))
        ));
    }

    #[test]
    fn streamed_episode_matches_stored_episode() {
        let u = generate_subspace(12, 3, &mut rng(40)).unwrap();
        let lambda = DVector::from_element(3, 1.0);
        let stored = Episode::generate(u.clone(), 4, 9, &lambda, &mut rng(41)).unwrap();
        let mut seen = Vec::new();
        let signals = stream_episode(&u, 4, 9, &lambda, &mut rng(41), |t, a, y| {
            seen.push((t, a.clone(), y.clone()));
        })
        .unwrap();
        assert_eq!(signals, stored.signals);
        for (t, a, y) in seen {
            assert_eq!(a, stored.measurements.sensing[t]);
            assert_eq!(y, stored.measurements.magnitudes_at(t));
        }
    }

    #[test]
    fn scenario_json_round_trip_and_generation() {
        let spec = ScenarioSpec {
            n: 20,
            r: 3,
            m: 15,
            q: 6,
            theta_degrees: vec![30.0],
            change_times: vec![5, 9],
            lambda_bar: vec![1.0, 1.0, 0.5],
            seed: 77,
        };
        let text = spec.to_json();
        for key in [
            "\"n\"",
            "\"theta_degrees\"",
            "\"change_times\"",
            "\"lambda_bar\"",
            "\"seed\"",
        ] {
            assert!(text.contains(key));
        }
        assert_eq!(ScenarioSpec::from_json(&text).unwrap(), spec);
        assert!(ScenarioSpec::from_json(r#"{"n":1,"bogus":2}"#).is_err());

        let sc = TrackingScenario::generate(&spec).unwrap();
        assert_eq!(
            sc.episodes.iter().map(Episode::len).collect::<Vec<_>>(),
            vec![5, 4, 6]
        );
        assert_eq!(sc.change_events.len(), 2);
        assert!((sc.delta_bound - 0.5).abs() <= 1e-8);
    }
}
