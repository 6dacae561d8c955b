use std::path::PathBuf;

use clap::Args;
use privglm::experiments::{write_failures_csv, write_trajectory_csv, FailedRun, TrajectoryGrid, TrajectoryOutcome};

use crate::exit::CliError;
use crate::output::{ManifestInfo, RunDir};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON grid config (kind, n, d, s, epsilon, delta, step_size, iterations, seeds).
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in grid: fig1a, fig1b, fig1c, fig2a, fig2b or fig2c.
    #[arg(long)]
    pub preset: Option<String>,
    /// Use the full-size sparse presets (d = 10000; needs several GB of memory).
    #[arg(long)]
    pub full: bool,
    #[arg(long)]
    pub output: PathBuf,
    /// Base seed; with --seeds K the run uses seeds base..base+K.
    #[arg(long, env = "PRIVGLM_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub seeds: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub step_size: Option<f64>,
    /// Grid cells run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let mut grid = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<TrajectoryGrid>(&text)
                .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?
        }
        (None, Some(name)) => TrajectoryGrid::preset(name, args.full)?,
        _ => return Err(CliError::usage("exactly one of --config or --preset is required")),
    };
    // flags override the config file
    if let Some(t) = args.iterations {
        grid.iterations = t;
    }
    if let Some(eta) = args.step_size {
        grid.step_size = eta;
    }
    let base = args.seed.unwrap_or(0);
    if let Some(k) = args.seeds {
        grid.seeds = (base..base + k as u64).collect();
    } else if grid.seeds.is_empty() {
        grid.seeds = vec![base];
    }
    if args.jobs == 0 {
        return Err(CliError::usage("--jobs must be >= 1"));
    }
    let cells = grid.cells()?;
    let config_json = serde_json::to_value(&grid).map_err(|e| CliError::io(e.to_string()))?;

    let mut dir = RunDir::create(&args.output)?;
    let outcomes = run_cells(&cells, &grid.seeds, args.jobs)?;

    let mut records = Vec::new();
    let mut failures: Vec<FailedRun> = Vec::new();
    let mut dead_cells = Vec::new();
    for (cell, outcome) in cells.iter().zip(&outcomes) {
        match outcome.final_sq_errors() {
            finals if finals.is_empty() => {
                println!("{:<36} all {} seeds failed", cell.label, grid.seeds.len());
                dead_cells.push(cell.label.clone());
            }
            finals => {
                let mean_log = finals.iter().map(|e| e.max(privglm::experiments::ERROR_FLOOR).ln()).sum::<f64>()
                    / finals.len() as f64;
                println!(
                    "{:<36} mean final log sq error {:>9.4} over {} seeds ({} failed)",
                    cell.label,
                    mean_log,
                    finals.len(),
                    outcome.failures.len()
                );
            }
        }
        records.extend(outcome.records.iter().cloned());
        failures.extend(outcome.failures.iter().cloned());
    }

    write_trajectory_csv(dir.file("trajectories.csv")?, &records)?;
    write_failures_csv(dir.file("failures.csv")?, &failures)?;
    dir.write_json("config.json", &config_json)?;

    if !dead_cells.is_empty() {
        return Err(CliError::divergence(format!(
            "estimator diverged for every seed in: {}",
            dead_cells.join("; ")
        )));
    }
    let resolved = serde_json::to_vec(&config_json).map_err(|e| CliError::io(e.to_string()))?;
    dir.finish(ManifestInfo {
        command: "simulate",
        config_path: args.config.as_ref().and_then(|p| p.to_str()),
        seed: base,
        seeds: grid.seeds.clone(),
        spec: format!("{} cells of a {:?} trajectory grid", cells.len(), grid.kind),
        config: config_json,
        inputs: vec![resolved],
    })?;
    println!("wrote {} trajectory rows to {}", records.len(), args.output.display());
    Ok(())
}

fn run_cells(
    cells: &[privglm::experiments::GridCell],
    seeds: &[u64],
    jobs: usize,
) -> Result<Vec<TrajectoryOutcome>, CliError> {
    if jobs <= 1 {
        return cells.iter().map(|c| c.run(seeds).map_err(CliError::from)).collect();
    }
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<privglm::Result<TrajectoryOutcome>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(cells.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = cells.get(i) else { break };
                let out = cell.run(seeds);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(out);
            });
        }
    });
    results
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every cell ran").map_err(CliError::from))
        .collect()
}
