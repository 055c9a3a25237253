//! Eigen and SVD-based routines against a cyclic Jacobi eigensolver.

#[path = "support/jacobi.rs"]
mod jacobi;

use jacobi::jacobi_eigen;
use nalgebra::{DMatrix, DVector};
use pst_core::metrics::subspace_error;
use pst_core::model::{generate_subspace, seeded_rng, BasisMatrix};
use pst_core::pstpca::finalize;
use pst_core::spectral::{min_eigenvalue, top_eigenpair};
use rand::Rng;

fn gaussian<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(rand_distr::StandardNormal))
}

#[test]
fn jacobi_oracle_sanity() {
    let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 2.0]));
    let (vals, vecs) = jacobi_eigen(&d);
    assert_eq!(vals, vec![4.0, 2.0, 1.0]);
    assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-15);
    let mut rng = seeded_rng(1, 0);
    let g = gaussian(7, 7, &mut rng);
    let s = &g + g.transpose();
    let (vals, vecs) = jacobi_eigen(&s);
    let rebuilt = &vecs * DMatrix::from_diagonal(&DVector::from_vec(vals)) * vecs.transpose();
    assert!((rebuilt - s).amax() <= 1e-12);
}

#[test]
fn eigen_routines_match_oracle() {
    let mut rng = seeded_rng(2024, 0);
    for instance in 0..50 {
        let n = 1 + instance % 50;
        let g = gaussian(n, n, &mut rng);
        let s = (&g + g.transpose()) * 0.5;
        let (vals, vecs) = jacobi_eigen(&s);
        let (l1, v1) = top_eigenpair(&s).unwrap();
        assert!(
            (l1 - vals[0]).abs() <= 1e-8 * vals[0].abs().max(1.0),
            "instance {instance}: {l1} vs {}",
            vals[0]
        );
        let lmin = min_eigenvalue(&s).unwrap();
        assert!((lmin - vals[n - 1]).abs() <= 1e-8 * vals[n - 1].abs().max(1.0));
        let gap = if n > 1 {
            vals[0] - vals[1]
        } else {
            f64::INFINITY
        };
        if gap > 1e-3 {
            let oracle = vecs.column(0).into_owned();
            let d = f64::min((&v1 - &oracle).norm(), (&v1 + &oracle).norm());
            assert!(d <= 1e-8, "instance {instance}: eigenvector off by {d}");
        }
    }
}

#[test]
fn finalize_matches_oracle() {
    let mut rng = seeded_rng(77, 0);
    for instance in 0..50 {
        let n = 3 + instance % 48;
        let k = 2 + instance % (n - 1).min(8);
        let q = 1 + (instance * 7) % 50;
        let r = k - 1;
        let u_tilde = generate_subspace(n, k, &mut rng).unwrap();
        let b = gaussian(k, q, &mut rng);
        let x_tilde = u_tilde.matrix() * &b;
        let (vals, vecs) = jacobi_eigen(&(&x_tilde * x_tilde.transpose()));
        let res = finalize(&u_tilde, &b, r).unwrap();
        if r <= q && vals[r - 1] - vals[r] > 1e-6 * vals[0] {
            let oracle = BasisMatrix::orthonormalized(vecs.columns(0, r).into_owned()).unwrap();
            let se = subspace_error(&res.u_hat, &oracle).unwrap();
            assert!(
                se <= 1e-8,
                "instance {instance} (n={n}, k={k}, q={q}): se {se}"
            );
        }
        // rank-r projection of X̃ from the oracle basis
        let p = vecs.columns(0, r).into_owned();
        let x_oracle = &p * p.tr_mul(&x_tilde);
        assert!(
            (&res.x_hat - x_oracle).amax() <= 1e-8 * x_tilde.amax().max(1.0)
                || vals[r - 1] - vals[r] <= 1e-6 * vals[0]
        );
    }
}
