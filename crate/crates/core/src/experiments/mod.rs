//! Simulation, real-data ingestion and experiment runners.

mod classification;
mod data_io;
mod grid;
mod synthetic;
mod trajectory;

pub use classification::{
    evaluate_misclassification, run_split_experiment, ClassificationReport, SplitOptions, SplitSetting,
};
pub use data_io::{
    content_hash, load_csv, load_csv_table, now_rfc3339, read_csv_table, write_csv, write_csv_to, write_failures_csv, write_manifest,
    write_trajectory_csv, CsvTable, RunManifest,
};
pub use grid::{parse_epsilon, GridCell, GridKind, TrajectoryGrid, PRESET_ITERATIONS, PRESET_SEEDS};
pub use synthetic::{generate_synthetic, sample_dataset, unit_sphere, SyntheticSpec};
pub use trajectory::{
    run_trajectory, EstimatorKind, EstimatorSettings, FailedRun, TrajectoryOutcome, TrajectoryRecord, ERROR_FLOOR,
};
