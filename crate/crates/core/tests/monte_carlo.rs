//! Seeded Monte-Carlo checks of statistical behavior.

use nalgebra::DVector;
use pst_core::baselines::{lrpr_altmin, wf_columns, wf_single, BaselineConfig};
use pst_core::detection::{simulate_statistic, DetectionScenario};
use pst_core::metrics::phase_invariant_dist;
use pst_core::model::{
    generate_subspace, perturb_subspace, rotate_one_direction, seeded_rng, Episode,
};
use pst_core::pstpca::{initialize, iterate, refine_with_lrpr, run_pst_pca, PstPcaOptions};
use pst_core::spectral::SpectralSummary;

fn angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.dot(b).abs() / (a.norm() * b.norm())).min(1.0).acos()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

#[test]
fn added_direction_angle_shrinks_over_first_iterations() {
    let (n, r, m, q) = (100, 5, 400, 400);
    let mut decreasing = 0;
    for seed in 0..20 {
        let u0 = generate_subspace(n, r, &mut seeded_rng(seed, 0)).unwrap();
        let (u1, ev) =
            rotate_one_direction(&u0, 30f64.to_radians(), r - 1, &mut seeded_rng(seed, 1)).unwrap();
        let ep = Episode::generate(
            u1,
            q,
            m,
            &DVector::from_element(r, 1.0),
            &mut seeded_rng(seed, 2),
        )
        .unwrap();
        let mut est = initialize(&ep.measurements, &u0).unwrap();
        let mut angles = vec![angle(&est.u_tilde.column(r), &ev.u_add)];
        for _ in 0..3 {
            iterate(&mut est, &ep.measurements, &u0).unwrap();
            angles.push(angle(&est.u_tilde.column(r), &ev.u_add));
        }
        if angles.windows(2).all(|w| w[1] < w[0]) {
            decreasing += 1;
        }
    }
    assert!(decreasing >= 16, "angle decreased in {decreasing}/20 runs");
}

#[test]
fn spectral_direction_improves_with_sample_size() {
    let (n, r, m) = (100, 5, 100);
    let qs = [100, 500, 2000];
    let mut mean = [0.0; 3];
    for seed in 0..20 {
        let u0 = generate_subspace(n, r, &mut seeded_rng(seed, 0)).unwrap();
        let (u1, ev) =
            rotate_one_direction(&u0, 45f64.to_radians(), r - 1, &mut seeded_rng(seed, 1)).unwrap();
        for (k, &q) in qs.iter().enumerate() {
            let ep = Episode::generate(
                u1.clone(),
                q,
                m,
                &DVector::from_element(r, 1.0),
                &mut seeded_rng(seed, 2),
            )
            .unwrap();
            let summary = SpectralSummary::compute(&ep.measurements, &u0).unwrap();
            mean[k] += angle(&summary.top_vec_tilde, &ev.u_add) / 20.0;
        }
    }
    assert!(
        mean[0] > mean[1] && mean[1] > mean[2],
        "mean angles {mean:?}"
    );
}

#[test]
fn no_change_statistic_concentrates_near_one() {
    let scenario = DetectionScenario {
        n: 50,
        r: 5,
        m: 200,
        q: 500,
        theta: None,
        se0: 0.0,
        lambda_bar: DVector::from_element(5, 1.0),
        chg_index: 4,
    };
    let stats: Vec<f64> = (0..50)
        .map(|k| simulate_statistic(&scenario, 900 + k).unwrap())
        .collect();
    let med = median(stats);
    assert!((0.8..=1.3).contains(&med), "median statistic {med}");
}

#[test]
fn wirtinger_flow_recovers_with_ample_measurements() {
    let (n, m) = (100, 800);
    let config = BaselineConfig {
        max_iters: 200,
        ..BaselineConfig::default()
    };
    let mut ok = 0;
    for seed in 0..20 {
        let u = generate_subspace(n, 1, &mut seeded_rng(seed, 0)).unwrap();
        let ep = Episode::generate(
            u,
            1,
            m,
            &DVector::from_element(1, 1.0),
            &mut seeded_rng(seed, 1),
        )
        .unwrap();
        let x = ep.signals.column(0).into_owned();
        let x_hat = wf_single(
            &ep.measurements.sensing[0],
            &ep.measurements.magnitudes_at(0),
            &config,
        )
        .unwrap();
        if phase_invariant_dist(&x, &x_hat).unwrap() / x.norm() <= 1e-3 {
            ok += 1;
        }
    }
    assert!(ok >= 14, "recovered {ok}/20");
}

#[test]
fn wirtinger_flow_fails_with_fewer_measurements_than_unknowns() {
    let (n, r, m, q) = (1000, 10, 700, 3);
    let u = generate_subspace(n, r, &mut seeded_rng(1, 0)).unwrap();
    let ep = Episode::generate(
        u,
        q,
        m,
        &DVector::from_element(r, 1.0),
        &mut seeded_rng(1, 1),
    )
    .unwrap();
    let config = BaselineConfig {
        max_iters: 200,
        ..BaselineConfig::default()
    };
    let res = wf_columns(&ep.measurements, &config, Some(&ep.signals)).unwrap();
    let err = res.trace.last().unwrap().norm_err.unwrap();
    assert!(err >= 0.5, "norm_err {err}");
}

struct Comparison {
    lrpr_first: f64,
    lrpr_last: f64,
    warm: f64,
}

fn compare(seed: u64) -> Comparison {
    let (n, r, m, q) = (200, 5, 250, 300);
    let u0 = generate_subspace(n, r, &mut seeded_rng(seed, 0)).unwrap();
    let prior = perturb_subspace(&u0, 1e-3, &mut seeded_rng(seed, 1)).unwrap();
    let (u1, _) =
        rotate_one_direction(&u0, 30f64.to_radians(), r - 1, &mut seeded_rng(seed, 2)).unwrap();
    let ep = Episode::generate(
        u1,
        q,
        m,
        &DVector::from_element(r, 1.0),
        &mut seeded_rng(seed, 3),
    )
    .unwrap();
    let lrpr = lrpr_altmin(
        &ep.measurements,
        r,
        &BaselineConfig {
            max_iters: 15,
            ..BaselineConfig::default()
        },
        Some(ep.truth()),
    )
    .unwrap();
    let pst = run_pst_pca(
        &ep.measurements,
        &prior,
        &PstPcaOptions {
            t_max: 12,
            delta_tol: 0.0,
            stop_below_se: None,
        },
        None,
    )
    .unwrap();
    let warm = refine_with_lrpr(&pst, &ep.measurements, 3, Some(ep.truth())).unwrap();
    Comparison {
        lrpr_first: lrpr.trace[1].norm_err.unwrap(),
        lrpr_last: lrpr.final_norm_err().unwrap(),
        warm: warm.final_norm_err().unwrap(),
    }
}

/// Both checks share one expensive 20-run sweep.
#[test]
fn full_subspace_alternating_minimization_sweep() {
    let runs: Vec<Comparison> = (0..20).map(|s| compare(500 + s)).collect();

    let improved = runs.iter().filter(|c| c.lrpr_last <= c.lrpr_first).count();
    println!("LRPR-AltMin improved from iteration 1 to 15 in {improved}/20 runs");

    let warm = median(runs.iter().map(|c| c.warm).collect());
    let cold = median(runs.iter().map(|c| c.lrpr_last).collect());
    println!("median final norm_err: warm-started {warm:.3e}, spectral-init {cold:.3e}");

    assert!(improved >= 16, "improved in {improved}/20 runs");
    assert!(
        warm < cold,
        "warm-started median {warm:.3e} is not below spectral-init median {cold:.3e}"
    );
}
