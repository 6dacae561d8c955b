use std::path::PathBuf;

use clap::{Args, ValueEnum};
use privglm::experiments::{load_csv_table, parse_epsilon};
use privglm::glm::{default_truncation, negative_log_likelihood, DesignBounds, GlmFamily, NormKind, ParamVector};
use privglm::mechanisms::{PrivacyBudget, RngStream};
use privglm::{fit_low_dim, fit_sparse_glm, GdConfig, IhtConfig};
use serde::Serialize;

use crate::exit::{data_error, CliError};
use crate::output::{ManifestInfo, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    /// Noisy gradient descent.
    Gd,
    /// Noisy iterative hard thresholding.
    Iht,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub label: String,
    /// logistic, linear, linear:<sigma> or poisson.
    #[arg(long, default_value = "logistic")]
    pub family: String,
    #[arg(long, value_enum)]
    pub estimator: EstimatorChoice,
    /// Privacy parameter; `inf` disables privacy noise.
    #[arg(long)]
    pub epsilon: String,
    /// Defaults to 1/(2n).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Required for --estimator iht.
    #[arg(long)]
    pub sparsity: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    pub step_size: f64,
    /// Response truncation level R; defaults to the family's recipe.
    #[arg(long)]
    pub truncation: Option<f64>,
    /// Bound on the design: ||x||_2 <= sigma_x sqrt(d) for gd, ||x||_inf <= sigma_x for iht.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_x: f64,
    /// Append a constant-one intercept column (kept in every iht support).
    #[arg(long)]
    pub intercept: bool,
    #[arg(long, env = "PRIVGLM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Serialize)]
struct ResolvedFit<'a> {
    data: String,
    label: &'a str,
    family: &'a str,
    estimator: EstimatorChoice,
    epsilon: String,
    delta: f64,
    sparsity: Option<usize>,
    iterations: usize,
    step_size: f64,
    truncation: f64,
    noise_base: f64,
    sigma_x: f64,
    intercept: bool,
}

pub fn run(args: &FitArgs) -> Result<(), CliError> {
    let family: GlmFamily = args.family.parse()?;
    let epsilon = parse_epsilon(&args.epsilon)?;
    if args.estimator == EstimatorChoice::Iht && args.sparsity.is_none() {
        return Err(CliError::usage("--sparsity is required with --estimator iht"));
    }
    if !(args.sigma_x.is_finite() && args.sigma_x > 0.0) {
        return Err(CliError::usage("--sigma-x must be a positive number"));
    }

    let table = load_csv_table(&args.data, &args.label).map_err(data_error)?;
    let mut headers: Vec<String> =
        table.headers.iter().enumerate().filter(|(j, _)| *j != table.label_index).map(|(_, h)| h.clone()).collect();
    let data = if args.intercept {
        headers.push("(intercept)".into());
        table.dataset.with_intercept()
    } else {
        table.dataset.clone()
    };
    let (n, d) = (data.n(), data.d());

    let private = epsilon.is_finite();
    let delta = args.delta.unwrap_or(if private { 1.0 / (2.0 * n as f64) } else { 0.0 });
    if private && delta <= 0.0 {
        return Err(CliError::usage("a finite --epsilon needs --delta > 0"));
    }
    let budget = if private { PrivacyBudget::new(epsilon, delta)? } else { PrivacyBudget::non_private() };
    let truncation = match (args.truncation, default_truncation(&family, n)) {
        (Some(r), _) => r,
        (None, Ok(r)) => r,
        (None, Err(_)) if !private => f64::INFINITY,
        (None, Err(e)) => return Err(e.into()),
    };
    let noise_base = if private {
        let c1 = family.psi_prime_bound();
        if !(c1.is_finite() && truncation.is_finite()) {
            return Err(CliError::usage(format!(
                "private fitting of the {} family needs bounded psi' and a finite --truncation",
                family.name()
            )));
        }
        4.0 * (truncation + c1) * args.sigma_x
    } else {
        0.0
    };
    let norm_kind = match args.estimator {
        EstimatorChoice::Gd => NormKind::L2SqrtD,
        EstimatorChoice::Iht => NormKind::Linf,
    };
    let bounds = DesignBounds::new(args.sigma_x, norm_kind)?;
    if private && !bounds.admits(&data) {
        return Err(CliError::data(format!(
            "design exceeds the bound sigma_x = {} ({norm_kind:?}); rescale the features or raise --sigma-x",
            args.sigma_x
        )));
    }

    let rng = RngStream::new(args.seed, 0);
    let estimate = match args.estimator {
        EstimatorChoice::Gd => {
            let config = GdConfig {
                step_size: args.step_size,
                iterations: args.iterations,
                truncation,
                noise_base,
                budget,
                init: ParamVector::zeros(d),
                design_bounds: bounds,
            };
            fit_low_dim(&family, &data, &config, rng)?.estimate
        }
        EstimatorChoice::Iht => {
            let config = IhtConfig {
                sparsity: args.sparsity.expect("checked above"),
                step_size: args.step_size,
                iterations: args.iterations,
                truncation,
                noise_base,
                budget,
                init: ParamVector::zeros(d),
                design_bounds: bounds,
                protected: if args.intercept { vec![d - 1] } else { Vec::new() },
            };
            fit_sparse_glm(&family, &data, &config, rng)?.estimate
        }
    };
    let loss = negative_log_likelihood(&family, &estimate, &data)?;

    let resolved = ResolvedFit {
        data: args.data.display().to_string(),
        label: &args.label,
        family: &args.family,
        estimator: args.estimator,
        epsilon: args.epsilon.clone(),
        delta,
        sparsity: args.sparsity,
        iterations: args.iterations,
        step_size: args.step_size,
        truncation,
        noise_base,
        sigma_x: args.sigma_x,
        intercept: args.intercept,
    };
    let config = serde_json::to_value(&resolved).map_err(|e| CliError::io(e.to_string()))?;

    let mut dir = RunDir::create(&args.output)?;
    let mut out = String::from("feature,coefficient\n");
    for (name, value) in headers.iter().zip(estimate.iter()) {
        out.push_str(&format!("{},{value}\n", csv_field(name)));
    }
    std::io::Write::write_all(&mut dir.file("estimate.csv")?, out.as_bytes()).map_err(|e| CliError::io(e.to_string()))?;

    let data_bytes = std::fs::read(&args.data).map_err(|e| CliError::data(e.to_string()))?;
    let config_bytes = serde_json::to_vec(&config).map_err(|e| CliError::io(e.to_string()))?;
    dir.finish(ManifestInfo {
        command: "fit",
        config_path: None,
        seed: args.seed,
        seeds: vec![args.seed],
        spec: format!("{:?} fit of a {} model on {n} rows, {d} coefficients", args.estimator, family.name()),
        config,
        inputs: vec![config_bytes, data_bytes],
    })?;
    println!("final loss {loss:.6} ({} nonzero of {d} coefficients)", estimate.nnz());
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
