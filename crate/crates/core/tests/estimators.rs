mod common;

use privglm::dp_gd::{gd_noise_std, gradient_step};
use privglm::experiments::{generate_synthetic, run_trajectory, EstimatorKind, EstimatorSettings, SyntheticSpec};
use privglm::glm::{clamped_gradient, DesignBounds, GlmFamily, NormKind, ParamVector};
use privglm::mechanisms::{PrivacyBudget, RngStream};
use privglm::stats::mean_and_se;
use privglm::{fit_low_dim, fit_sparse_glm, Error, GdConfig, IhtConfig};
use rand::Rng;

fn logistic_data(n: usize, d: usize, sparsity: Option<usize>, seed: u64) -> (privglm::Dataset, ParamVector) {
    generate_synthetic(&SyntheticSpec { n, d, sparsity, family: GlmFamily::logistic(), seed }).unwrap()
}

fn gd_config(d: usize, step: f64, iterations: usize, noise_base: f64, budget: PrivacyBudget) -> GdConfig {
    GdConfig {
        step_size: step,
        iterations,
        truncation: 1.0,
        noise_base,
        budget,
        init: ParamVector::zeros(d),
        design_bounds: DesignBounds::new(1.0, NormKind::L2SqrtD).unwrap(),
    }
}

fn iht_config(d: usize, s: usize, step: f64, iterations: usize, noise_base: f64, budget: PrivacyBudget) -> IhtConfig {
    IhtConfig {
        sparsity: s,
        step_size: step,
        iterations,
        truncation: 1.0,
        noise_base,
        budget,
        init: ParamVector::zeros(d),
        design_bounds: DesignBounds::new(1.0, NormKind::Linf).unwrap(),
        protected: Vec::new(),
    }
}

#[test]
fn noise_free_gd_matches_reference_bit_for_bit() {
    let budget = PrivacyBudget::new(0.5, 1e-4).unwrap();
    for seed in 0..3 {
        let (data, _) = logistic_data(500, 8, None, seed);
        let fit = fit_low_dim(&GlmFamily::logistic(), &data, &gd_config(8, 1.0, 30, 0.0, budget), RngStream::from_seed(seed)).unwrap();
        let oracle = common::reference_gd(common::logistic_mean, &data, 1.0, 30, 1.0);
        let lib: Vec<Vec<f64>> = fit.trace.iter().map(|b| b.to_vec()).collect();
        assert_eq!(lib, oracle);
        assert_eq!(fit.per_iter_noise_std, 0.0);
    }
}

#[test]
fn noise_free_iht_matches_reference_bit_for_bit() {
    let budget = PrivacyBudget::non_private();
    for seed in 0..3 {
        let (data, _) = logistic_data(500, 40, Some(4), seed);
        let fit = fit_sparse_glm(&GlmFamily::logistic(), &data, &iht_config(40, 8, 1.0, 30, 8.0, budget), RngStream::from_seed(seed)).unwrap();
        let oracle = common::reference_iht(common::logistic_mean, &data, 8, 1.0, 30, 1.0);
        let lib: Vec<Vec<f64>> = fit.iterates.iter().map(|b| b.to_vec()).collect();
        assert_eq!(lib, oracle);
    }
}

#[test]
fn non_private_gd_reaches_stationary_point() {
    let (data, _) = logistic_data(2000, 5, None, 11);
    let fit = fit_low_dim(&GlmFamily::logistic(), &data, &gd_config(5, 1.0, 200, 0.0, PrivacyBudget::non_private()), RngStream::from_seed(0)).unwrap();
    let grad = clamped_gradient(&GlmFamily::logistic(), &fit.estimate, &data, f64::INFINITY).unwrap();
    assert!(grad.dot(&grad).sqrt() <= 1e-4);
    // a much longer run lands on the same point
    let long = fit_low_dim(&GlmFamily::logistic(), &data, &gd_config(5, 1.0, 2000, 0.0, PrivacyBudget::non_private()), RngStream::from_seed(0)).unwrap();
    assert!(fit.estimate.sq_distance(&long.estimate).sqrt() < 1e-3);
}

#[test]
fn noise_std_equals_formula() {
    let mut g = RngStream::from_seed(5).generator();
    for _ in 0..20 {
        let (eta, b, d, n, t) = (g.random_range(0.1..2.0), g.random_range(0.5..10.0), g.random_range(1..100usize), g.random_range(100..100_000usize), g.random_range(1..100usize));
        let budget = PrivacyBudget::new(g.random_range(0.05..3.0), g.random_range(1e-8..1e-2)).unwrap();
        let got = gd_noise_std(eta, b, d, n, t, budget).unwrap();
        let (nf, tf) = (n as f64, t as f64);
        let variance = eta * eta * 2.0 * b * b * d as f64 * (2.0 * tf / budget.delta).ln() / (nf * nf * (budget.epsilon / tf) * (budget.epsilon / tf));
        assert_eq!(got, variance.sqrt());
    }
    assert_eq!(gd_noise_std(1.0, 8.0, 5, 100, 10, PrivacyBudget::non_private()).unwrap(), 0.0);
    assert!(matches!(gd_noise_std(1.0, 8.0, 5, 100, 10, PrivacyBudget::new(1.0, 0.0).unwrap()), Err(Error::Unsupported(_))));
}

/// Fifty adjacent pairs: one row replaced by another point of the design
/// domain. Step difference is bounded by eta 4 (R + c1) sigma_x sqrt(d) / n in
/// l2 and by eta 4 (R + c1) sigma_x / n in l_inf.
#[test]
fn step_sensitivity_bounds_hold() {
    let family = GlmFamily::logistic();
    let (r, c1, sigma_x) = (1.0, 1.0, 1.0);
    let root = RngStream::from_seed(99);
    for pair in 0..50u64 {
        let stream = root.derive(pair);
        let mut g = stream.generator();
        let d = g.random_range(1..30usize);
        let n = g.random_range(10..200usize);
        let (data, _) = logistic_data(n, d, None, pair);
        let i = g.random_range(0..n);
        // corners of the cube are the extreme points of the domain
        let x_new: ndarray::Array1<f64> = (0..d).map(|_| if g.random::<bool>() { 1.0 } else { -1.0 }).collect();
        let y_new = if data.y()[i] == 0.0 { 1.0 } else { 0.0 };
        let adjacent = data.with_row_replaced(i, y_new, x_new.view()).unwrap();
        let beta = ParamVector::from_vec((0..d).map(|_| g.random_range(-2.0..2.0)).collect()).unwrap();
        let eta = g.random_range(0.1..2.0);

        let a = gradient_step(&family, &beta, &data, eta, r).unwrap();
        let b = gradient_step(&family, &beta, &adjacent, eta, r).unwrap();
        let diff = &a - &b;
        let l2 = diff.dot(&diff).sqrt();
        let linf = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let base = eta * 4.0 * (r + c1) * sigma_x / n as f64;
        assert!(l2 <= base * (d as f64).sqrt(), "pair {pair}: l2 {l2}");
        assert!(linf <= base, "pair {pair}: linf {linf}");
    }
}

#[test]
fn sparse_iterates_respect_sparsity() {
    let (data, _) = logistic_data(800, 60, Some(3), 4);
    let budget = PrivacyBudget::new(0.3, 1e-4).unwrap();
    let fit = fit_sparse_glm(&GlmFamily::logistic(), &data, &iht_config(60, 6, 1.0, 25, 8.0, budget), RngStream::from_seed(2)).unwrap();
    assert!(fit.iterates.iter().all(|b| b.nnz() <= 6));
    assert!(fit.support_trace.iter().all(|s| s.len() <= 6));
    assert_eq!(fit.iterates.len(), 26);
}

#[test]
fn dimension_mismatch_is_rejected() {
    let (data, _) = logistic_data(50, 5, None, 0);
    let budget = PrivacyBudget::non_private();
    assert!(matches!(fit_low_dim(&GlmFamily::logistic(), &data, &gd_config(4, 1.0, 3, 0.0, budget), RngStream::from_seed(0)), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(fit_sparse_glm(&GlmFamily::logistic(), &data, &iht_config(6, 2, 1.0, 3, 0.0, budget), RngStream::from_seed(0)), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn utility_improves_with_epsilon() {
    let spec = SyntheticSpec { n: 40_000, d: 20, sparsity: None, family: GlmFamily::logistic(), seed: 0 };
    let seeds: Vec<u64> = (100..120).collect();
    let stats: Vec<(f64, f64)> = [0.2, 0.5, 0.8, f64::INFINITY]
        .iter()
        .map(|&epsilon| {
            let settings = EstimatorSettings {
                estimator: EstimatorKind::LowDim,
                step_size: 1.0,
                iterations: 10,
                epsilon,
                delta: None,
                truncation: None,
                sigma_x: 1.0,
            };
            let out = run_trajectory(&spec, &settings, &seeds, "eps").unwrap();
            mean_and_se(&out.final_sq_errors())
        })
        .collect();
    let inversions: Vec<usize> = (1..stats.len()).filter(|&k| stats[k].0 > stats[k - 1].0).collect();
    assert!(inversions.len() <= 1, "{stats:?}");
    for k in inversions {
        assert!(stats[k].0 - stats[k - 1].0 <= stats[k].1.max(stats[k - 1].1), "{stats:?}");
    }
}

#[test]
fn non_private_iht_recovers_large_coefficients() {
    let mut recovered = 0;
    for seed in 0..20u64 {
        let (data, truth) = logistic_data(4000, 200, Some(5), 1000 + seed);
        let fit = fit_sparse_glm(&GlmFamily::logistic(), &data, &iht_config(200, 10, 1.0, 300, 0.0, PrivacyBudget::non_private()), RngStream::from_seed(seed)).unwrap();
        let support = fit.estimate.support();
        let ok = truth.iter().enumerate().filter(|(_, b)| b.abs() >= 0.4).all(|(j, _)| support.contains(&j));
        recovered += usize::from(ok);
    }
    assert!(recovered >= 18, "recovered in {recovered} of 20 seeds");
}
