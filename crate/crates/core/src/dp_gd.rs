//! Noisy full-batch gradient descent for low-dimensional GLMs.
//!
//! Each iteration takes a gradient step on the response-truncated loss and
//! adds isotropic Gaussian noise. With `noise_base = 4 (R + c1) sigma_x` and a
//! design satisfying `||x||_2 < sigma_x sqrt(d)`, every step is
//! `(eps/T, delta/T)`-DP and the whole run is `(eps, delta)`-DP.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::glm::{clamped_gradient, default_truncation, Dataset, DesignBounds, GlmFamily, ParamVector};
use crate::mechanisms::{gaussian_vector, PrivacyBudget, RngStream};

/// Iterates whose Euclidean norm exceeds this are reported as divergence.
pub const DIVERGENCE_NORM: f64 = 1e6;

/// Smoothness constant used by the recipe when none is known.
pub const DEFAULT_GAMMA: f64 = 1.0;
/// Restricted strong convexity constant used by the recipe when none is known.
pub const DEFAULT_ALPHA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub step_size: f64,
    pub iterations: usize,
    pub truncation: f64,
    pub noise_base: f64,
    pub budget: PrivacyBudget,
    pub init: ParamVector,
    pub design_bounds: DesignBounds,
}

impl GdConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        ensure_dim(d, self.init.len())?;
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidParameter(format!("step size must be > 0, got {}", self.step_size)));
        }
        if self.truncation.is_nan() || self.truncation < 0.0 {
            return Err(Error::InvalidParameter(format!("truncation must be >= 0, got {}", self.truncation)));
        }
        if !(self.noise_base.is_finite() && self.noise_base >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise base must be >= 0, got {}", self.noise_base)));
        }
        Ok(())
    }

    /// Standard deviation of the per-iteration Gaussian noise for a dataset of size `n`.
    pub fn noise_std(&self, n: usize) -> Result<f64> {
        gd_noise_std(self.step_size, self.noise_base, self.init.len(), n, self.iterations, self.budget)
    }
}

/// Square root of `eta^2 * 2 B^2 * d * log(2T/delta) / (n^2 (eps/T)^2)`.
pub fn gd_noise_std(
    step_size: f64,
    noise_base: f64,
    d: usize,
    n: usize,
    iterations: usize,
    budget: PrivacyBudget,
) -> Result<f64> {
    if noise_base == 0.0 || !budget.is_private() {
        return Ok(0.0);
    }
    if budget.delta <= 0.0 {
        return Err(Error::Unsupported("Gaussian noise calibration needs delta > 0".into()));
    }
    let t = iterations as f64;
    let n = n as f64;
    let eps_step = budget.epsilon / t;
    let variance = step_size * step_size * 2.0 * noise_base * noise_base * d as f64 * (2.0 * t / budget.delta).ln()
        / (n * n * eps_step * eps_step);
    Ok(variance.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub estimate: ParamVector,
    /// `beta^0, ..., beta^T`.
    pub trace: Vec<ParamVector>,
    pub per_iter_noise_std: f64,
    pub config_used: GdConfig,
}

/// Noise-free part of one iteration: `beta - eta * grad_R L_n(beta)`.
pub fn gradient_step(
    family: &GlmFamily,
    beta: &ParamVector,
    data: &Dataset,
    step_size: f64,
    truncation: f64,
) -> Result<Array1<f64>> {
    let grad = clamped_gradient(family, beta, data, truncation)?;
    Ok(beta.as_array() - &(grad * step_size))
}

/// Runs noisy gradient descent. Iteration `t` draws its noise from `rng.derive(t)`.
pub fn fit_low_dim(family: &GlmFamily, data: &Dataset, config: &GdConfig, rng: RngStream) -> Result<FitResult> {
    config.validate(data.d())?;
    let sigma = config.noise_std(data.n())?;
    let mut beta = config.init.clone();
    let mut trace = Vec::with_capacity(config.iterations + 1);
    trace.push(beta.clone());
    for t in 0..config.iterations {
        let mut next = gradient_step(family, &beta, data, config.step_size, config.truncation)?;
        if sigma > 0.0 {
            next += &gaussian_vector(sigma, data.d(), rng.derive(t as u64))?;
        }
        beta = checked_iterate(next, t + 1)?;
        trace.push(beta.clone());
    }
    Ok(FitResult {
        estimate: beta,
        trace,
        per_iter_noise_std: sigma,
        config_used: config.clone(),
    })
}

pub(crate) fn checked_iterate(values: Array1<f64>, iteration: usize) -> Result<ParamVector> {
    let norm = values.dot(&values).sqrt();
    if !norm.is_finite() || norm > DIVERGENCE_NORM {
        return Err(Error::Divergence { iteration });
    }
    ParamVector::new(values).map_err(|_| Error::Divergence { iteration })
}

/// Parameter recipe: `eta = 3/(4 gamma)`, `T = ceil((2 gamma/alpha) log(9n))`,
/// `R` from [`default_truncation`], `B = 4 (R + c1) sigma_x`, `beta^0 = 0`.
///
/// `gamma` and `alpha` are the restricted smoothness and strong convexity
/// constants of the loss; [`DEFAULT_GAMMA`] and [`DEFAULT_ALPHA`] are
/// reasonable for logistic regression with standardized bounded designs.
pub fn recommend_gd_config(
    family: &GlmFamily,
    n: usize,
    d: usize,
    budget: PrivacyBudget,
    design_bounds: DesignBounds,
    gamma: f64,
    alpha: f64,
) -> Result<GdConfig> {
    if n < 2 || d == 0 {
        return Err(Error::InvalidParameter(format!("recipe needs n >= 2 and d >= 1, got n={n}, d={d}")));
    }
    if !(alpha > 0.0 && alpha <= gamma && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "recipe needs 0 < alpha <= gamma, got alpha={alpha}, gamma={gamma}"
        )));
    }
    let c1 = family.psi_prime_bound();
    if !c1.is_finite() {
        return Err(Error::Unsupported(format!(
            "{} family has unbounded psi'; set c1 explicitly or build the config by hand",
            family.name()
        )));
    }
    let truncation = default_truncation(family, n)?;
    Ok(GdConfig {
        step_size: 3.0 / (4.0 * gamma),
        iterations: ((2.0 * gamma / alpha) * (9.0 * n as f64).ln()).ceil() as usize,
        truncation,
        noise_base: 4.0 * (truncation + c1) * design_bounds.sigma_x,
        budget,
        init: ParamVector::zeros(d),
        design_bounds,
    })
}
