use std::path::PathBuf;

use clap::{Args, ValueEnum};
use privglm::experiments::{parse_epsilon, unit_sphere};
use privglm::glm::{default_truncation, Dataset, DesignBounds, GlmFamily, NormKind, ParamVector};
use privglm::mechanisms::{PrivacyBudget, RngStream};
use privglm::score_attack::{run_attack_experiment_with, AttackReport};
use privglm::{fit_low_dim, GdConfig};
use serde::Serialize;

use crate::exit::CliError;
use crate::output::{ManifestInfo, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackEstimator {
    /// Always returns the zero vector.
    Constant,
    /// Non-private gradient descent run close to the maximum likelihood estimate.
    Mle,
    /// Noisy gradient descent at the given --epsilon/--delta.
    DpGd,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long, default_value = "logistic")]
    pub family: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, value_enum)]
    pub estimator: AttackEstimator,
    /// Required for dp-gd.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Defaults to 1/(2n).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Defaults: 150 for mle, 10 for dp-gd.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Defaults: 5 for mle, 1 for dp-gd.
    #[arg(long)]
    pub step_size: Option<f64>,
    /// Draw s-sparse true parameters and restrict the attack to their support.
    #[arg(long)]
    pub sparsity: Option<usize>,
    #[arg(long, env = "PRIVGLM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Serialize)]
struct ResolvedAttack<'a> {
    family: &'a str,
    n: usize,
    d: usize,
    trials: usize,
    estimator: AttackEstimator,
    epsilon: Option<String>,
    delta: Option<f64>,
    iterations: Option<usize>,
    step_size: Option<f64>,
    sparsity: Option<usize>,
}

pub fn run(args: &AttackArgs) -> Result<(), CliError> {
    let family: GlmFamily = args.family.parse()?;
    if args.n < 2 || args.d == 0 {
        return Err(CliError::usage("--n must be >= 2 and --d >= 1"));
    }
    if let Some(s) = args.sparsity {
        if s == 0 || s > args.d {
            return Err(CliError::usage(format!("--sparsity must lie in 1..={}", args.d)));
        }
    }
    let (iterations, step_size, epsilon, delta) = match args.estimator {
        AttackEstimator::Constant => (None, None, None, None),
        AttackEstimator::Mle => (Some(args.iterations.unwrap_or(150)), Some(args.step_size.unwrap_or(5.0)), None, None),
        AttackEstimator::DpGd => {
            let text = args.epsilon.as_deref().ok_or_else(|| CliError::usage("--epsilon is required for dp-gd"))?;
            let eps = parse_epsilon(text)?;
            let delta = args.delta.unwrap_or(1.0 / (2.0 * args.n as f64));
            (Some(args.iterations.unwrap_or(10)), Some(args.step_size.unwrap_or(1.0)), Some(eps), Some(delta))
        }
    };

    let d = args.d;
    let gd = |data: &Dataset, rng: RngStream, budget: PrivacyBudget| -> privglm::Result<ParamVector> {
        let truncation = default_truncation(&family, data.n()).unwrap_or(f64::INFINITY);
        let noise_base =
            if budget.is_private() { 4.0 * (truncation + family.psi_prime_bound()) } else { 0.0 };
        let config = GdConfig {
            step_size: step_size.expect("set for gradient estimators"),
            iterations: iterations.expect("set for gradient estimators"),
            truncation,
            noise_base,
            budget,
            init: ParamVector::zeros(d),
            design_bounds: DesignBounds::new(1.0, NormKind::L2SqrtD)?,
        };
        Ok(fit_low_dim(&family, data, &config, rng)?.estimate)
    };
    let budget = match (epsilon, delta) {
        (Some(e), Some(dl)) if e.is_finite() => PrivacyBudget::new(e, dl)?,
        _ => PrivacyBudget::non_private(),
    };
    if budget.is_private() && !family.psi_prime_bound().is_finite() {
        return Err(CliError::usage(format!("dp-gd needs a family with bounded psi', not {}", family.name())));
    }
    let estimator = |data: &Dataset, rng: RngStream| -> privglm::Result<ParamVector> {
        match args.estimator {
            AttackEstimator::Constant => Ok(ParamVector::zeros(d)),
            AttackEstimator::Mle => gd(data, rng, PrivacyBudget::non_private()),
            AttackEstimator::DpGd => gd(data, rng, budget),
        }
    };
    let sparsity = args.sparsity;
    let sampler = |rng: RngStream| {
        let active = sparsity.unwrap_or(d);
        let mut beta = vec![0.0; d];
        beta[..active].copy_from_slice(unit_sphere(active, rng).as_slice().expect("contiguous"));
        ParamVector::from_vec(beta).expect("finite draw")
    };
    let report: AttackReport = run_attack_experiment_with(
        &family,
        &estimator,
        args.n,
        d,
        sampler,
        args.trials,
        sparsity.is_some(),
        RngStream::new(args.seed, 0),
    )?;

    let resolved = ResolvedAttack {
        family: &args.family,
        n: args.n,
        d,
        trials: args.trials,
        estimator: args.estimator,
        epsilon: args.epsilon.clone(),
        delta,
        iterations,
        step_size,
        sparsity,
    };
    let config = serde_json::to_value(&resolved).map_err(|e| CliError::io(e.to_string()))?;
    let mut dir = RunDir::create(&args.output)?;
    dir.write_json("attack.json", &report)?;
    let config_bytes = serde_json::to_vec(&config).map_err(|e| CliError::io(e.to_string()))?;
    dir.finish(ManifestInfo {
        command: "attack",
        config_path: None,
        seed: args.seed,
        seeds: vec![args.seed],
        spec: format!("score attack on {:?} over {} trials", args.estimator, args.trials),
        config,
        inputs: vec![config_bytes],
    })?;
    println!(
        "out-of-sample mean {:.5} (se {:.5}); in-sample sum {:.5} (se {:.5})",
        report.mean_out, report.se_out, report.sum_in, report.se_sum_in
    );
    Ok(())
}
