//! Noisy iterative hard thresholding for sparse high-dimensional estimation.
//!
//! The generic driver [`noisy_iht`] works with any per-sample-decomposable
//! objective; [`fit_sparse_glm`] specializes it to the truncated GLM loss.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::dp_gd::checked_iterate;
use crate::error::{ensure_dim, Error, Result};
use crate::glm::{clamped_gradient, default_truncation, Dataset, DesignBounds, GlmFamily, ParamVector};
use crate::mechanisms::{
    noisy_hard_threshold_protected, peeling_noise_scale, PrivacyBudget, RngStream, ThresholdTrace,
};

/// Absolute constant in the theoretical sparsity level `s = 4 c0 (gamma/alpha)^2 s*`.
pub const SPARSITY_CONSTANT: f64 = 72.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IhtConfig {
    pub sparsity: usize,
    pub step_size: f64,
    pub iterations: usize,
    pub truncation: f64,
    pub noise_base: f64,
    pub budget: PrivacyBudget,
    pub init: ParamVector,
    pub design_bounds: DesignBounds,
    /// Coordinates kept in every support regardless of magnitude (e.g. an
    /// intercept). They count towards `sparsity`.
    #[serde(default)]
    pub protected: Vec<usize>,
}

impl IhtConfig {
    pub fn validate(&self, d: usize) -> Result<()> {
        ensure_dim(d, self.init.len())?;
        if self.sparsity == 0 || self.sparsity > d {
            return Err(Error::InvalidParameter(format!(
                "sparsity must satisfy 1 <= s <= d = {d}, got {}",
                self.sparsity
            )));
        }
        if self.init.nnz() > self.sparsity {
            return Err(Error::InvalidParameter(format!(
                "initial value has {} nonzeros, more than s = {}",
                self.init.nnz(),
                self.sparsity
            )));
        }
        if self.protected.len() > self.sparsity || self.protected.iter().any(|&j| j >= d) {
            return Err(Error::InvalidParameter("invalid protected coordinates".into()));
        }
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

    /// Budget handed to each thresholding call: `(eps/T, delta/T)`.
    pub fn per_iteration_budget(&self) -> Result<PrivacyBudget> {
        self.budget.split(self.iterations)
    }

    /// Sensitivity bound `eta * B / n` passed to each thresholding call.
    pub fn threshold_lambda(&self, n: usize) -> f64 {
        self.step_size * self.noise_base / n as f64
    }

    /// Per-coordinate Laplace scale used inside every iteration.
    pub fn laplace_scale(&self, n: usize) -> Result<f64> {
        peeling_noise_scale(self.threshold_lambda(n), self.sparsity, self.per_iteration_budget()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFitResult {
    pub estimate: ParamVector,
    /// `theta^0, ..., theta^T`.
    pub iterates: Vec<ParamVector>,
    /// Support selected in each iteration (selection order).
    pub support_trace: Vec<Vec<usize>>,
    /// `||theta^t - theta*||^2`, filled in by callers that know the truth.
    pub error_trace: Vec<f64>,
    pub threshold_traces: Vec<ThresholdTrace>,
    pub laplace_scale: f64,
    pub config_used: IhtConfig,
}

impl SparseFitResult {
    /// Fills `error_trace` with squared distances to `truth`.
    pub fn record_errors(&mut self, truth: &ParamVector) {
        self.error_trace = self.iterates.iter().map(|it| it.sq_distance(truth)).collect();
    }
}

/// Noisy IHT on an objective `L_n = (1/n) sum_i l(theta; z_i)`.
///
/// `config.noise_base` must bound `||grad l(theta; z) - grad l(theta; z')||_inf`
/// over all `theta` and data pairs for the run to be `config.budget`-private.
/// Iteration `t` thresholds with stream `rng.derive(t)`.
pub fn noisy_iht<F>(mut gradient: F, n: usize, config: &IhtConfig, rng: RngStream) -> Result<SparseFitResult>
where
    F: FnMut(&ParamVector) -> Result<Array1<f64>>,
{
    let d = config.init.len();
    config.validate(d)?;
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    let step_budget = config.per_iteration_budget()?;
    let lambda = config.threshold_lambda(n);
    let laplace_scale = peeling_noise_scale(lambda, config.sparsity, step_budget)?;

    let mut theta = config.init.clone();
    let mut iterates = Vec::with_capacity(config.iterations + 1);
    let mut support_trace = Vec::with_capacity(config.iterations);
    let mut threshold_traces = Vec::with_capacity(config.iterations);
    iterates.push(theta.clone());
    for t in 0..config.iterations {
        let grad = gradient(&theta)?;
        ensure_dim(d, grad.len())?;
        let half_step = theta.as_array() - &(grad * config.step_size);
        let (next, trace) = noisy_hard_threshold_protected(
            half_step.view(),
            config.sparsity,
            &config.protected,
            step_budget,
            lambda,
            rng.derive(t as u64),
        )?;
        theta = checked_iterate(next, t + 1)?;
        debug_assert!(theta.nnz() <= config.sparsity);
        support_trace.push(trace.selected_support.clone());
        threshold_traces.push(trace);
        iterates.push(theta.clone());
    }
    Ok(SparseFitResult {
        estimate: theta,
        iterates,
        support_trace,
        error_trace: Vec::new(),
        threshold_traces,
        laplace_scale,
        config_used: config.clone(),
    })
}

/// Private sparse GLM estimation: noisy IHT on the truncated GLM loss.
///
/// With `||x||_inf < sigma_x` and `noise_base = 4 (R + c1) sigma_x` the run is
/// `config.budget`-private.
pub fn fit_sparse_glm(family: &GlmFamily, data: &Dataset, config: &IhtConfig, rng: RngStream) -> Result<SparseFitResult> {
    ensure_dim(data.d(), config.init.len())?;
    noisy_iht(
        |theta| clamped_gradient(family, theta, data, config.truncation),
        data.n(),
        config,
        rng,
    )
}

/// How [`recommend_iht_config`] picks sparsity, step size and iteration count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum IhtRecipe {
    /// `s = 4 c0 (gamma/alpha)^2 s*`, `eta = 1/(2 gamma)`,
    /// `T = ceil((2 gamma / (rho alpha)) log(6 gamma n))`. The constants make
    /// `s` very large; only usable when `d` is correspondingly large.
    Theory { gamma: f64, alpha: f64, rho: f64 },
    /// `s = 2 s*`, `eta = 1`, caller-chosen `T`.
    Practical { iterations: usize },
}

pub fn recommend_iht_config(
    family: &GlmFamily,
    n: usize,
    d: usize,
    s_star: usize,
    budget: PrivacyBudget,
    design_bounds: DesignBounds,
    recipe: IhtRecipe,
) -> Result<IhtConfig> {
    if s_star == 0 {
        return Err(Error::InvalidParameter("true sparsity must be >= 1".into()));
    }
    let c1 = family.psi_prime_bound();
    if !c1.is_finite() {
        return Err(Error::Unsupported(format!(
            "{} family has unbounded psi'; set c1 explicitly or build the config by hand",
            family.name()
        )));
    }
    let (sparsity, step_size, iterations) = match recipe {
        IhtRecipe::Theory { gamma, alpha, rho } => {
            if !(alpha > 0.0 && alpha <= gamma && gamma.is_finite()) || !(rho > 0.0 && rho < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "theory recipe needs 0 < alpha <= gamma and 0 < rho < 1, got alpha={alpha}, gamma={gamma}, rho={rho}"
                )));
            }
            let ratio = gamma / alpha;
            let s = (4.0 * SPARSITY_CONSTANT * ratio * ratio * s_star as f64).ceil() as usize;
            let t = ((2.0 * gamma / (rho * alpha)) * (6.0 * gamma * n as f64).ln()).ceil().max(1.0) as usize;
            (s, 1.0 / (2.0 * gamma), t)
        }
        IhtRecipe::Practical { iterations } => (2 * s_star, 1.0, iterations),
    };
    if sparsity > d {
        return Err(Error::Infeasible(format!(
            "sparsity level {sparsity} exceeds dimension {d}; use the practical recipe"
        )));
    }
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be >= 1".into()));
    }
    let truncation = default_truncation(family, n)?;
    Ok(IhtConfig {
        sparsity,
        step_size,
        iterations,
        truncation,
        noise_base: 4.0 * (truncation + c1) * design_bounds.sigma_x,
        budget,
        init: ParamVector::zeros(d),
        design_bounds,
        protected: Vec::new(),
    })
}
