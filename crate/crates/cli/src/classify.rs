use std::path::PathBuf;

use clap::Args;
use privglm::experiments::{load_csv, parse_epsilon, run_split_experiment, SplitOptions, SplitSetting};
use privglm::mechanisms::RngStream;
use serde::Serialize;

use crate::exit::{data_error, CliError};
use crate::output::{ManifestInfo, RunDir};

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub label: String,
    /// Comma-separated sparsity levels.
    #[arg(long, value_delimiter = ',', default_values_t = [25usize, 50, 100])]
    pub sparsity: Vec<usize>,
    /// Comma-separated privacy levels; `inf` for non-private.
    #[arg(long, value_delimiter = ',', default_values = ["0.2", "0.5", "inf"])]
    pub epsilon: Vec<String>,
    /// Defaults to 1/(2 n_train).
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 20)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0.5)]
    pub step_size: f64,
    /// Let hard thresholding drop the intercept like any other coordinate.
    #[arg(long)]
    pub threshold_intercept: bool,
    /// Use the features as given instead of scaling them to [-1, 1] on the training half.
    #[arg(long)]
    pub no_scale: bool,
    #[arg(long, env = "PRIVGLM_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Serialize)]
struct Resolved<'a> {
    data: String,
    label: &'a str,
    settings: &'a [SplitSetting],
    repetitions: usize,
    options: SplitOptions,
}

pub fn run(args: &ClassifyArgs) -> Result<(), CliError> {
    let epsilons = args.epsilon.iter().map(|e| parse_epsilon(e)).collect::<privglm::Result<Vec<_>>>()?;
    let settings: Vec<SplitSetting> = epsilons
        .iter()
        .flat_map(|&epsilon| args.sparsity.iter().map(move |&sparsity| SplitSetting { sparsity, epsilon, delta: args.delta }))
        .collect();
    let options = SplitOptions {
        iterations: args.iterations,
        step_size: args.step_size,
        threshold_intercept: args.threshold_intercept,
        scale_features: !args.no_scale,
    };
    let data = load_csv(&args.data, &args.label).map_err(data_error)?;
    let reports = run_split_experiment(&data, &settings, args.repetitions, &options, RngStream::new(args.seed, 0))?;

    let mut dir = RunDir::create(&args.output)?;
    let mut out = String::from("sparsity,epsilon,delta,misclassification_rate,std_error,repetitions\n");
    for r in &reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.sparsity, r.epsilon, r.delta, r.misclassification_rate, r.std_error, r.repetitions
        ));
        println!("s={:<5} eps={:<6} rate {:.3} ({:.3})", r.sparsity, r.epsilon, r.misclassification_rate, r.std_error);
    }
    std::io::Write::write_all(&mut dir.file("classification.csv")?, out.as_bytes())
        .map_err(|e| CliError::io(e.to_string()))?;
    let config = serde_json::to_value(Resolved {
        data: args.data.display().to_string(),
        label: &args.label,
        settings: &settings,
        repetitions: args.repetitions,
        options,
    })
    .map_err(|e| CliError::io(e.to_string()))?;
    let data_bytes = std::fs::read(&args.data).map_err(|e| CliError::data(e.to_string()))?;
    let config_bytes = serde_json::to_vec(&config).map_err(|e| CliError::io(e.to_string()))?;
    dir.finish(ManifestInfo {
        command: "classify",
        config_path: None,
        seed: args.seed,
        seeds: vec![args.seed],
        spec: format!("{} split repetitions over {} settings", args.repetitions, settings.len()),
        config,
        inputs: vec![config_bytes, data_bytes],
    })
}
