mod common;

use privglm::experiments::unit_sphere;
use privglm::glm::{default_truncation, Dataset, DesignBounds, GlmFamily, NormKind, ParamVector};
use privglm::mechanisms::{PrivacyBudget, RngStream};
use privglm::score_attack::{run_attack_experiment, run_attack_experiment_with, AttackReport};
use privglm::{fit_low_dim, GdConfig};

const N: usize = 500;
const D: usize = 5;

fn gd(family: GlmFamily, step: f64, iterations: usize, budget: PrivacyBudget) -> impl Fn(&Dataset, RngStream) -> privglm::Result<ParamVector> {
    move |data, rng| {
        let truncation = default_truncation(&family, data.n()).unwrap_or(f64::INFINITY);
        let noise_base = if budget.is_private() { 4.0 * (truncation + family.psi_prime_bound()) } else { 0.0 };
        let config = GdConfig {
            step_size: step,
            iterations,
            truncation,
            noise_base,
            budget,
            init: ParamVector::zeros(data.d()),
            design_bounds: DesignBounds::new(1.0, NormKind::L2SqrtD)?,
        };
        Ok(fit_low_dim(&family, data, &config, rng)?.estimate)
    }
}

fn sphere(rng: RngStream) -> ParamVector {
    ParamVector::new(unit_sphere(D, rng)).unwrap()
}

fn sound(report: &AttackReport) -> bool {
    report.mean_out.abs() <= 4.0 * report.se_out
}

#[test]
fn soundness_for_constant_and_private_estimators() {
    let family = GlmFamily::logistic();
    let constant = |_: &Dataset, _: RngStream| Ok(ParamVector::from_vec(vec![0.3; D]).unwrap());
    let report = run_attack_experiment(&family, &constant, N, D, sphere, 200, RngStream::from_seed(1)).unwrap();
    assert!(sound(&report), "{report:?}");

    let budget = PrivacyBudget::new(0.5, 1.0 / (2.0 * N as f64)).unwrap();
    let report = run_attack_experiment(&family, &gd(family, 1.0, 10, budget), N, D, sphere, 200, RngStream::from_seed(2)).unwrap();
    assert!(sound(&report), "{report:?}");
}

#[test]
fn soundness_for_linear_family_and_sparse_attack() {
    let family = GlmFamily::linear(1.0).unwrap();
    let mle = gd(family, 1.0, 100, PrivacyBudget::non_private());
    let report = run_attack_experiment(&family, &mle, 200, D, sphere, 200, RngStream::from_seed(3)).unwrap();
    assert!(sound(&report), "{report:?}");

    let sparse_beta = |rng: RngStream| {
        let mut b = vec![0.0; D];
        b[..2].copy_from_slice(unit_sphere(2, rng).as_slice().unwrap());
        ParamVector::from_vec(b).unwrap()
    };
    let logistic = GlmFamily::logistic();
    let report = run_attack_experiment_with(&logistic, &gd(logistic, 5.0, 150, PrivacyBudget::non_private()), N, D, sparse_beta, 200, true, RngStream::from_seed(4)).unwrap();
    assert!(sound(&report), "{report:?}");
    assert!(report.sum_in > 0.0);
}

#[test]
fn completeness_matches_finite_difference_oracle() {
    let family = GlmFamily::logistic();
    let mle = gd(family, 5.0, 150, PrivacyBudget::non_private());
    let report = run_attack_experiment(&family, &mle, N, D, sphere, 200, RngStream::from_seed(5)).unwrap();
    assert!(report.sum_in > 0.0 && report.sum_in > 2.0 * report.se_sum_in, "{report:?}");

    let (oracle, oracle_se) = common::fd_completeness_oracle(
        &family,
        |data, rng| mle(data, rng).unwrap(),
        sphere,
        N,
        200,
        0.05,
        RngStream::from_seed(6),
    );
    let combined = (report.se_sum_in.powi(2) + oracle_se.powi(2)).sqrt();
    assert!((report.sum_in - oracle).abs() <= 3.0 * combined, "harness {report:?}, oracle {oracle} ({oracle_se})");
}

#[test]
fn heavy_privacy_shrinks_in_sample_sum() {
    let family = GlmFamily::logistic();
    let mle = run_attack_experiment(&family, &gd(family, 5.0, 150, PrivacyBudget::non_private()), N, D, sphere, 200, RngStream::from_seed(7)).unwrap();
    let budget = PrivacyBudget::new(0.1, 1.0 / (2.0 * N as f64)).unwrap();
    let private = run_attack_experiment(&family, &gd(family, 1.0, 10, budget), N, D, sphere, 200, RngStream::from_seed(7)).unwrap();
    eprintln!("mle {mle:?}\ndp  {private:?}");
    assert!(private.sum_in < mle.sum_in, "mle {mle:?}, dp {private:?}");
}
