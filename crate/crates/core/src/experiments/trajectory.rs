use serde::{Deserialize, Serialize};

use crate::dp_gd::{fit_low_dim, GdConfig};
use crate::dp_iht::{fit_sparse_glm, IhtConfig};
use crate::error::{Error, Result};
use crate::glm::{default_truncation, Dataset, DesignBounds, GlmFamily, NormKind, ParamVector};
use crate::mechanisms::{PrivacyBudget, RngStream};

/// Squared errors below this are floored before taking logs.
pub const ERROR_FLOOR: f64 = 1e-300;

use super::synthetic::{generate_synthetic, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Noisy gradient descent.
    LowDim,
    /// Noisy iterative hard thresholding at the given sparsity level.
    Sparse { sparsity: usize },
}

/// Estimator settings for a trajectory run. Truncation and noise scale are
/// derived from the family unless given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub estimator: EstimatorKind,
    pub step_size: f64,
    pub iterations: usize,
    pub epsilon: f64,
    /// Defaults to `1/(2n)`.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub truncation: Option<f64>,
    /// Design bound; 1 for the Uniform(-1, 1) design.
    #[serde(default = "one")]
    pub sigma_x: f64,
}

fn one() -> f64 {
    1.0
}

impl EstimatorSettings {
    pub fn budget(&self, n: usize) -> Result<PrivacyBudget> {
        if self.epsilon.is_infinite() {
            return Ok(PrivacyBudget::non_private());
        }
        PrivacyBudget::new(self.epsilon, self.delta.unwrap_or(1.0 / (2.0 * n as f64)))
    }

    fn truncation_and_noise_base(&self, family: &GlmFamily, n: usize) -> Result<(f64, f64)> {
        let r = match self.truncation {
            Some(r) => r,
            None => default_truncation(family, n)?,
        };
        if self.epsilon.is_infinite() {
            return Ok((r, 0.0));
        }
        let c1 = family.psi_prime_bound();
        if !(c1.is_finite() && r.is_finite()) {
            return Err(Error::Unsupported(format!(
                "private fitting of the {} family needs finite c1 and R",
                family.name()
            )));
        }
        Ok((r, 4.0 * (r + c1) * self.sigma_x))
    }

    /// Runs the configured estimator and returns its iterates `beta^0..beta^T`.
    pub fn fit(&self, family: &GlmFamily, data: &Dataset, rng: RngStream) -> Result<Vec<ParamVector>> {
        let (truncation, noise_base) = self.truncation_and_noise_base(family, data.n())?;
        let budget = self.budget(data.n())?;
        let init = ParamVector::zeros(data.d());
        match self.estimator {
            EstimatorKind::LowDim => {
                let config = GdConfig {
                    step_size: self.step_size,
                    iterations: self.iterations,
                    truncation,
                    noise_base,
                    budget,
                    init,
                    design_bounds: DesignBounds::new(self.sigma_x, NormKind::L2SqrtD)?,
                };
                Ok(fit_low_dim(family, data, &config, rng)?.trace)
            }
            EstimatorKind::Sparse { sparsity } => {
                let config = IhtConfig {
                    sparsity,
                    step_size: self.step_size,
                    iterations: self.iterations,
                    truncation,
                    noise_base,
                    budget,
                    init,
                    design_bounds: DesignBounds::new(self.sigma_x, NormKind::Linf)?,
                    protected: Vec::new(),
                };
                Ok(fit_sparse_glm(family, data, &config, rng)?.iterates)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub config_label: String,
    pub seed: u64,
    pub iteration: usize,
    pub log_sq_error: f64,
}

/// A seed whose run could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRun {
    pub config_label: String,
    pub seed: u64,
    /// Iteration at which divergence was detected, when applicable.
    pub iteration: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutcome {
    pub records: Vec<TrajectoryRecord>,
    pub failures: Vec<FailedRun>,
}

impl TrajectoryOutcome {
    /// Mean over seeds of the squared error at the last iteration. `None` when
    /// every seed failed.
    pub fn mean_final_sq_error(&self) -> Option<f64> {
        let last = self.records.iter().map(|r| r.iteration).max()?;
        let finals: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.iteration == last)
            .map(|r| r.log_sq_error.exp())
            .collect();
        Some(finals.iter().sum::<f64>() / finals.len() as f64)
    }

    /// Per-seed final squared errors.
    pub fn final_sq_errors(&self) -> Vec<f64> {
        let Some(last) = self.records.iter().map(|r| r.iteration).max() else {
            return Vec::new();
        };
        self.records
            .iter()
            .filter(|r| r.iteration == last)
            .map(|r| r.log_sq_error.exp())
            .collect()
    }
}

/// For every seed: simulate data from `spec` with that seed, fit, and record
/// `log ||beta^t - beta*||^2` for `t = 0..=T`. Divergence and other estimator
/// errors become [`FailedRun`]s.
pub fn run_trajectory(
    spec: &SyntheticSpec,
    settings: &EstimatorSettings,
    seeds: &[u64],
    config_label: &str,
) -> Result<TrajectoryOutcome> {
    if let (EstimatorKind::Sparse { sparsity }, Some(s_star)) = (settings.estimator, spec.sparsity) {
        if sparsity < s_star {
            return Err(Error::InvalidParameter(format!(
                "estimator sparsity {sparsity} below true sparsity {s_star}"
            )));
        }
    }
    let mut outcome = TrajectoryOutcome::default();
    for &seed in seeds {
        let seeded = SyntheticSpec { seed, ..spec.clone() };
        let (data, truth) = generate_synthetic(&seeded)?;
        match settings.fit(&spec.family, &data, RngStream::new(seed, 1)) {
            Ok(iterates) => {
                outcome.records.extend(iterates.iter().enumerate().map(|(t, beta)| TrajectoryRecord {
                    config_label: config_label.to_owned(),
                    seed,
                    iteration: t,
                    log_sq_error: beta.sq_distance(&truth).max(ERROR_FLOOR).ln(),
                }));
            }
            Err(err @ (Error::InvalidParameter(_) | Error::Unsupported(_) | Error::DimensionMismatch { .. })) => {
                return Err(err);
            }
            Err(err) => outcome.failures.push(FailedRun {
                config_label: config_label.to_owned(),
                seed,
                iteration: match err {
                    Error::Divergence { iteration } => Some(iteration),
                    _ => None,
                },
                message: err.to_string(),
            }),
        }
    }
    Ok(outcome)
}
