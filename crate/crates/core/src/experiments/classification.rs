use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dp_iht::{fit_sparse_glm, IhtConfig};
use crate::error::{Error, Result};
use crate::glm::{Dataset, DesignBounds, FamilyKind, GlmFamily, NormKind, ParamVector};
use crate::mechanisms::{PrivacyBudget, RngStream};
use crate::stats::mean_and_se;

/// Fraction of test rows where `1{x'beta > 0}` disagrees with the label.
pub fn evaluate_misclassification(family: &GlmFamily, estimate: &ParamVector, test: &Dataset) -> Result<f64> {
    if family.kind() != FamilyKind::Logistic {
        return Err(Error::Unsupported(format!("misclassification needs the logistic family, got {}", family.name())));
    }
    crate::error::ensure_dim(test.d(), estimate.len())?;
    let wrong = test
        .x()
        .rows()
        .into_iter()
        .zip(test.y().iter())
        .filter(|(row, &y)| {
            let predicted = if row.dot(estimate.as_array()) > 0.0 { 1.0 } else { 0.0 };
            predicted != y
        })
        .count();
    Ok(wrong as f64 / test.n() as f64)
}

/// One `(s, epsilon, delta)` cell of a split experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSetting {
    pub sparsity: usize,
    pub epsilon: f64,
    /// Defaults to `1/(2 n_train)`.
    #[serde(default)]
    pub delta: Option<f64>,
}

/// Fitting knobs shared by all cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    pub iterations: usize,
    pub step_size: f64,
    /// Subject the intercept to hard thresholding like any other coordinate.
    pub threshold_intercept: bool,
    /// Divide each feature by its largest absolute value on the training half
    /// so that the design bound is 1.
    pub scale_features: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self { iterations: 50, step_size: 0.5, threshold_intercept: false, scale_features: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub misclassification_rate: f64,
    pub std_error: f64,
    pub sparsity: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub repetitions: usize,
}

/// Repeated random 50/50 splits. Every repetition fits each setting on the
/// same training half (with an intercept column appended as the last
/// coordinate) and scores it on the other half.
pub fn run_split_experiment(
    data: &Dataset,
    settings: &[SplitSetting],
    repetitions: usize,
    options: &SplitOptions,
    rng: RngStream,
) -> Result<Vec<ClassificationReport>> {
    if data.n() < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2 to split, got {}", data.n())));
    }
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
    }
    let family = GlmFamily::logistic();
    let n_train = data.n() / 2;
    let mut rates = vec![Vec::with_capacity(repetitions); settings.len()];
    for rep in 0..repetitions {
        let stream = rng.derive(rep as u64);
        let mut order: Vec<usize> = (0..data.n()).collect();
        order.shuffle(&mut stream.derive(0).generator());
        let (mut train, mut test) = (data.select_rows(&order[..n_train])?, data.select_rows(&order[n_train..])?);
        if options.scale_features {
            (train, test) = scale_by_train_max(&train, &test)?;
        }
        let (train, test) = (train.with_intercept(), test.with_intercept());
        let intercept = train.d() - 1;
        for (k, setting) in settings.iter().enumerate() {
            let config = split_config(setting, options, &train, intercept)?;
            let fit = fit_sparse_glm(&family, &train, &config, stream.derive(1 + k as u64))?;
            rates[k].push(evaluate_misclassification(&family, &fit.estimate, &test)?);
        }
    }
    Ok(settings
        .iter()
        .zip(rates)
        .map(|(setting, r)| {
            let (mean, se) = mean_and_se(&r);
            ClassificationReport {
                misclassification_rate: mean,
                std_error: se,
                sparsity: setting.sparsity,
                epsilon: setting.epsilon,
                delta: setting.delta.unwrap_or(1.0 / (2.0 * n_train as f64)),
                repetitions,
            }
        })
        .collect())
}

fn split_config(setting: &SplitSetting, options: &SplitOptions, train: &Dataset, intercept: usize) -> Result<IhtConfig> {
    let n = train.n();
    let budget = if setting.epsilon.is_infinite() {
        PrivacyBudget::non_private()
    } else {
        PrivacyBudget::new(setting.epsilon, setting.delta.unwrap_or(1.0 / (2.0 * n as f64)))?
    };
    let sigma_x = train.x().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    // binary labels: R = 1 and c1 = 1
    let noise_base = if budget.is_private() { 4.0 * 2.0 * sigma_x } else { 0.0 };
    Ok(IhtConfig {
        sparsity: setting.sparsity,
        step_size: options.step_size,
        iterations: options.iterations,
        truncation: 1.0,
        noise_base,
        budget,
        init: ParamVector::zeros(train.d()),
        design_bounds: DesignBounds::new(sigma_x.max(f64::MIN_POSITIVE), NormKind::Linf)?,
        protected: if options.threshold_intercept { Vec::new() } else { vec![intercept] },
    })
}

fn scale_by_train_max(train: &Dataset, test: &Dataset) -> Result<(Dataset, Dataset)> {
    let scales: Vec<f64> = train
        .x()
        .columns()
        .into_iter()
        .map(|c| {
            let m = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m > 0.0 { m } else { 1.0 }
        })
        .collect();
    let scale = |data: &Dataset| {
        let mut x = data.x().clone();
        for (mut col, s) in x.columns_mut().into_iter().zip(&scales) {
            col /= *s;
        }
        Dataset::new(x, data.y().clone())
    };
    Ok((scale(train)?, scale(test)?))
}
