use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use risklab::stats::{
    bootstrap_bounds, estimate_moments, evaluate_performance, min_eigenvalue, psd_repair,
    simulate_mvn, MomentEstimate, PerformanceConfig,
};
use risklab::ReturnSample;

fn returns(max_rows: usize, max_assets: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2..=max_rows, 1..=max_assets).prop_flat_map(|(rows, n)| {
        prop::collection::vec(prop::collection::vec(-0.1f64..0.1, n), rows)
    })
}

fn symmetric(max_n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-2.0f64..2.0, n * n).prop_map(move |v| {
            let m = DMatrix::from_vec(n, n, v);
            (&m + m.transpose()) * 0.5
        })
    })
}

proptest! {
    #[test]
    fn sample_covariance_is_psd(rows in returns(30, 6)) {
        let m = estimate_moments(&ReturnSample::from_rows(&rows).unwrap()).unwrap();
        prop_assert!(min_eigenvalue(&m.cov).unwrap() >= -1e-10);
    }

    #[test]
    fn repair_is_idempotent_and_psd(m in symmetric(8)) {
        let once = psd_repair(&m).unwrap();
        let twice = psd_repair(&once).unwrap();
        prop_assert!(min_eigenvalue(&once).unwrap() >= -1e-10);
        prop_assert!((&twice - &once).amax() <= 1e-10);
    }

    #[test]
    fn sortino_unchanged_by_repeating_the_sample(rows in returns(25, 4), rf in 0.0f64..0.2) {
        let n = rows[0].len();
        let weights = vec![1.0 / n as f64; n];
        let cfg = PerformanceConfig::with_rf(rf);
        let once = evaluate_performance(&ReturnSample::from_rows(&rows).unwrap(), &weights, &cfg).unwrap();
        let doubled: Vec<Vec<f64>> = rows.iter().chain(rows.iter()).cloned().collect();
        let twice = evaluate_performance(&ReturnSample::from_rows(&doubled).unwrap(), &weights, &cfg).unwrap();
        match (once.sortino, twice.sortino) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0)),
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn covariance_bound_grows_with_confidence(rows in returns(40, 4), seed in any::<u64>()) {
        let sample = ReturnSample::from_rows(&rows).unwrap();
        let low = bootstrap_bounds(&sample, 0.90, 200, seed).unwrap();
        let high = bootstrap_bounds(&sample, 0.95, 200, seed).unwrap();
        for (a, b) in low.cov_upper_raw.iter().zip(high.cov_upper_raw.iter()) {
            prop_assert!(a <= b);
        }
        for (a, b) in low.mean_lower.iter().zip(high.mean_lower.iter()) {
            prop_assert!(a >= b);
        }
    }
}

#[test]
fn isotropic_simulation_matches_variance() {
    let samples = 100_000;
    let sigma2 = 2.5e-4;
    let truth = MomentEstimate::new(DVector::zeros(3), DMatrix::identity(3, 3) * sigma2).unwrap();
    let sim = simulate_mvn(&truth, samples, 99).unwrap();
    let est = estimate_moments(&sim).unwrap();
    for j in 0..3 {
        let rel = (est.cov[(j, j)] - sigma2).abs() / sigma2;
        assert!(rel <= 4.0 / (samples as f64).sqrt(), "asset {j}: relative error {rel}");
    }
}
