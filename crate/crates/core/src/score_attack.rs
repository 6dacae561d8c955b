//! Score attack: a membership statistic `<M(X) - theta, S_theta(z)>` built from
//! the score of a candidate datum, and a Monte Carlo harness that measures its
//! out-of-sample mean (soundness) and in-sample sum (completeness) for any
//! estimator.

use ndarray::{Array1, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::experiments::sample_dataset;
use crate::glm::{Dataset, GlmFamily, ParamVector};
use crate::mechanisms::RngStream;
use crate::stats::mean_and_se;

/// Fewest trials the harness accepts.
pub const MIN_TRIALS: usize = 30;

/// A single evaluation of the attack statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackValue {
    pub value: f64,
    pub in_sample: bool,
}

/// Monte Carlo summary of an attack experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    /// Mean of the attack on a datum left out of the estimator's input.
    pub mean_out: f64,
    pub se_out: f64,
    /// Mean over trials of the attack summed over all in-sample data.
    pub sum_in: f64,
    pub se_sum_in: f64,
    pub n: usize,
    pub trials: usize,
}

/// Score of one GLM datum: `(y - psi'(x'beta)) x / c(sigma)`.
pub fn glm_score(family: &GlmFamily, beta: &ParamVector, y: f64, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    ensure_dim(beta.len(), x.len())?;
    let residual = y - family.psi_prime(x.dot(beta.as_array()));
    Ok(x.mapv(|v| residual * v / family.c_sigma()))
}

/// `<estimate - true_beta, score>`.
pub fn attack_value(estimate: &ParamVector, true_beta: &ParamVector, score: ArrayView1<'_, f64>) -> Result<f64> {
    ensure_dim(true_beta.len(), estimate.len())?;
    ensure_dim(true_beta.len(), score.len())?;
    Ok(estimate
        .iter()
        .zip(true_beta.iter())
        .zip(score.iter())
        .map(|((m, b), s)| (m - b) * s)
        .sum())
}

/// Attack restricted to the coordinates where `true_beta` is nonzero.
pub fn sparse_attack_value(estimate: &ParamVector, true_beta: &ParamVector, score: ArrayView1<'_, f64>) -> Result<f64> {
    ensure_dim(true_beta.len(), estimate.len())?;
    ensure_dim(true_beta.len(), score.len())?;
    Ok(estimate
        .iter()
        .zip(true_beta.iter())
        .zip(score.iter())
        .filter(|((_, b), _)| **b != 0.0)
        .map(|((m, b), s)| (m - b) * s)
        .sum())
}

/// An estimator under audit: a deterministic or seeded function of its dataset.
pub trait Estimator {
    fn estimate(&self, data: &Dataset, rng: RngStream) -> Result<ParamVector>;
}

impl<F> Estimator for F
where
    F: Fn(&Dataset, RngStream) -> Result<ParamVector>,
{
    fn estimate(&self, data: &Dataset, rng: RngStream) -> Result<ParamVector> {
        self(data, rng)
    }
}

/// Dense GLM score attack experiment; see [`run_attack_experiment_with`].
pub fn run_attack_experiment<E, B>(
    family: &GlmFamily,
    estimator: &E,
    n: usize,
    d: usize,
    beta_sampler: B,
    trials: usize,
    rng: RngStream,
) -> Result<AttackReport>
where
    E: Estimator + ?Sized,
    B: Fn(RngStream) -> ParamVector,
{
    run_attack_experiment_with(family, estimator, n, d, beta_sampler, trials, false, rng)
}

/// Runs `trials` independent attack trials.
///
/// Each trial draws `beta` from `beta_sampler`, a dataset of `n` rows with
/// Uniform(-1, 1) design, a uniformly random row index `i` and an independent
/// replacement datum. The soundness sample is the attack on the original row
/// `i` against the estimate computed with row `i` replaced; the completeness
/// sample is the attack summed over all rows against the estimate on the
/// original data. With `sparse = true` the attack is restricted to the
/// support of `beta`.
#[allow(clippy::too_many_arguments)]
pub fn run_attack_experiment_with<E, B>(
    family: &GlmFamily,
    estimator: &E,
    n: usize,
    d: usize,
    beta_sampler: B,
    trials: usize,
    sparse: bool,
    rng: RngStream,
) -> Result<AttackReport>
where
    E: Estimator + ?Sized,
    B: Fn(RngStream) -> ParamVector,
{
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_TRIALS} trials, got {trials}")));
    }
    if n < 2 || d == 0 {
        return Err(Error::InvalidParameter(format!("need n >= 2 and d >= 1, got n={n}, d={d}")));
    }
    let attack = if sparse { sparse_attack_value } else { attack_value };
    let mut out_values = Vec::with_capacity(trials);
    let mut in_sums = Vec::with_capacity(trials);
    for trial in 0..trials {
        let stream = rng.derive(trial as u64);
        let wrap = |e: Error| Error::Trial { trial, source: Box::new(e) };

        let beta = beta_sampler(stream.derive(0));
        ensure_dim(d, beta.len()).map_err(wrap)?;
        let data = sample_dataset(family, &beta, n, stream.derive(1));
        let i = stream.derive(2).generator().random_range(0..n);
        let fresh = sample_dataset(family, &beta, 1, stream.derive(3));
        let swapped = data.with_row_replaced(i, fresh.y()[0], fresh.row(0)).map_err(wrap)?;

        let full_estimate = estimator.estimate(&data, stream.derive(4)).map_err(wrap)?;
        let swapped_estimate = estimator.estimate(&swapped, stream.derive(5)).map_err(wrap)?;

        let score_i = glm_score(family, &beta, data.y()[i], data.row(i))?;
        out_values.push(attack(&swapped_estimate, &beta, score_i.view())?);

        let mut score_sum = Array1::<f64>::zeros(d);
        for k in 0..n {
            score_sum += &glm_score(family, &beta, data.y()[k], data.row(k))?;
        }
        in_sums.push(attack(&full_estimate, &beta, score_sum.view())?);
    }
    let (mean_out, se_out) = mean_and_se(&out_values);
    let (sum_in, se_sum_in) = mean_and_se(&in_sums);
    Ok(AttackReport { mean_out, se_out, sum_in, se_sum_in, n, trials })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> ParamVector {
        ParamVector::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn score_examples() {
        let s = glm_score(&GlmFamily::logistic(), &pv(&[0.0, 0.0]), 1.0, array![1.0, 1.0].view()).unwrap();
        assert_eq!(s, array![0.5, 0.5]);
        let s = glm_score(&GlmFamily::linear(1.0).unwrap(), &pv(&[1.0]), 2.0, array![1.0].view()).unwrap();
        assert_eq!(s, array![1.0]);
        let s = glm_score(&GlmFamily::logistic(), &pv(&[1.0, 0.0]), 0.0, array![1.0, 1.0].view()).unwrap();
        assert_relative_eq!(s[0], -0.731_058_578_630_004_9, max_relative = 1e-15);
        assert_relative_eq!(s[1], -0.731_058_578_630_004_9, max_relative = 1e-15);
        // c(sigma) = 4 divides the score
        let s = glm_score(&GlmFamily::linear(2.0).unwrap(), &pv(&[1.0]), 3.0, array![1.0].view()).unwrap();
        assert_eq!(s, array![0.5]);
        assert!(glm_score(&GlmFamily::logistic(), &pv(&[1.0]), 0.0, array![1.0, 1.0].view()).is_err());
    }

    #[test]
    fn attack_examples() {
        let score = array![0.5, 0.5];
        assert_eq!(attack_value(&pv(&[1.5, 2.0]), &pv(&[0.5, 2.0]), score.view()).unwrap(), 0.5);
        assert_eq!(attack_value(&pv(&[0.3, 0.1]), &pv(&[0.3, 0.1]), score.view()).unwrap(), 0.0);
        assert_eq!(attack_value(&pv(&[1.0, -1.0]), &pv(&[0.0, 0.0]), score.view()).unwrap(), 0.0);
    }

    #[test]
    fn sparse_attack_examples() {
        let ones = array![1.0, 1.0];
        assert_eq!(sparse_attack_value(&pv(&[2.0, 5.0]), &pv(&[1.0, 0.0]), ones.view()).unwrap(), 1.0);
        let dense = pv(&[0.4, -0.2]);
        let est = pv(&[1.0, 3.0]);
        let score = array![0.7, -1.1];
        assert_eq!(
            sparse_attack_value(&est, &dense, score.view()).unwrap(),
            attack_value(&est, &dense, score.view()).unwrap()
        );
        assert_eq!(sparse_attack_value(&est, &pv(&[0.0, 0.0]), score.view()).unwrap(), 0.0);
    }

    #[test]
    fn harness_rejects_few_trials() {
        let est = |_: &Dataset, _: RngStream| Ok(ParamVector::zeros(2));
        let err = run_attack_experiment(&GlmFamily::logistic(), &est, 10, 2, |_| ParamVector::zeros(2), 0, RngStream::from_seed(0));
        assert!(err.is_err());
    }

    #[test]
    fn harness_propagates_estimator_failure() {
        let est = |_: &Dataset, _: RngStream| -> Result<ParamVector> { Err(Error::Divergence { iteration: 3 }) };
        let err = run_attack_experiment(&GlmFamily::logistic(), &est, 10, 2, |_| ParamVector::zeros(2), 30, RngStream::from_seed(0));
        assert!(matches!(err, Err(Error::Trial { trial: 0, .. })));
    }

    proptest! {
        #[test]
        fn attack_is_bilinear(
            diff in proptest::collection::vec(-5.0f64..5.0, 4),
            score in proptest::collection::vec(-5.0f64..5.0, 4),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let truth = pv(&[0.1, -0.2, 0.3, 0.0]);
            let est = |k: f64| pv(&truth.iter().zip(&diff).map(|(t, d)| t + k * d).collect::<Vec<_>>());
            let s = Array1::from(score.clone());
            let base = attack_value(&est(1.0), &truth, s.view()).unwrap();
            let scaled = attack_value(&est(a), &truth, (&s * b).view()).unwrap();
            prop_assert!((scaled - a * b * base).abs() <= 1e-9 * (1.0 + base.abs() * (a * b).abs()));
        }

        #[test]
        fn sparse_attack_equals_restricted_dense(
            est in proptest::collection::vec(-5.0f64..5.0, 6),
            score in proptest::collection::vec(-5.0f64..5.0, 6),
            mask in proptest::collection::vec(any::<bool>(), 6),
        ) {
            let truth = pv(&mask.iter().enumerate().map(|(j, m)| if *m { j as f64 + 1.0 } else { 0.0 }).collect::<Vec<_>>());
            let est_v = pv(&est);
            let restricted = pv(&est.iter().zip(&mask).map(|(e, m)| if *m { *e } else { 0.0 }).collect::<Vec<_>>());
            let s = Array1::from(score);
            let lhs = sparse_attack_value(&est_v, &truth, s.view()).unwrap();
            let rhs = attack_value(&restricted, &truth, s.view()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
