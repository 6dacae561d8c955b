use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::glm::Dataset;

use super::trajectory::{FailedRun, TrajectoryRecord};

/// A dataset together with the column layout it was read from.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub dataset: Dataset,
    /// All header names, in file order.
    pub headers: Vec<String>,
    /// Position of the label among `headers`.
    pub label_index: usize,
    /// Original text of the two classes when labels were non-numeric; the
    /// first maps to 0 and the second to 1.
    pub label_classes: Option<[String; 2]>,
}

/// Reads a comma-separated file with a header row. The `label_column`
/// becomes `y`; every other column is a numeric feature.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset> {
    Ok(load_csv_table(path, label_column)?.dataset)
}

pub fn load_csv_table(path: impl AsRef<Path>, label_column: &str) -> Result<CsvTable> {
    let file = std::fs::File::open(path)?;
    read_csv_table(file, label_column)
}

/// [`load_csv_table`] over any reader.
pub fn read_csv_table<R: Read>(reader: R, label_column: &str) -> Result<CsvTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if headers.iter().all(String::is_empty) {
        return Err(Error::Dataset("no rows".into()));
    }
    let label_index = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Dataset(format!("label column '{label_column}' not found in header")))?;
    if headers.len() < 2 {
        return Err(Error::Dataset("need at least one feature column besides the label".into()));
    }
    let d = headers.len() - 1;

    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mut row = Vec::with_capacity(d);
        for (j, cell) in record.iter().enumerate() {
            if j == label_index {
                if cell.is_empty() {
                    return Err(Error::Data { line, message: "missing label".into() });
                }
                raw_labels.push((line, cell.to_owned()));
                continue;
            }
            if cell.is_empty() {
                return Err(Error::Data { line, message: format!("missing value in column '{}'", headers[j]) });
            }
            let v: f64 = cell.parse().map_err(|_| Error::Data {
                line,
                message: format!("non-numeric value '{cell}' in column '{}'", headers[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Data { line, message: format!("non-finite value '{cell}' in column '{}'", headers[j]) });
            }
            row.push(v);
        }
        features.extend(row);
    }
    if raw_labels.is_empty() {
        return Err(Error::Dataset("no rows".into()));
    }
    let (y, label_classes) = map_labels(&raw_labels)?;
    let n = y.len();
    let x = Array2::from_shape_vec((n, d), features).map_err(|e| Error::Dataset(e.to_string()))?;
    Ok(CsvTable { dataset: Dataset::new(x, Array1::from(y))?, headers, label_index, label_classes })
}

fn map_labels(raw: &[(usize, String)]) -> Result<(Vec<f64>, Option<[String; 2]>)> {
    let numeric: Option<Vec<f64>> = raw.iter().map(|(_, s)| s.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data { line: raw[pos].0, message: format!("non-finite label '{}'", raw[pos].1) });
        }
        return Ok((values, None));
    }
    let classes: BTreeSet<&str> = raw.iter().map(|(_, s)| s.as_str()).collect();
    if classes.len() != 2 {
        return Err(Error::Dataset(format!(
            "text labels must have exactly two classes, found {}",
            classes.len()
        )));
    }
    let mut it = classes.into_iter();
    let zero = it.next().expect("two classes").to_owned();
    let one = it.next().expect("two classes").to_owned();
    let y = raw.iter().map(|(_, s)| if *s == zero { 0.0 } else { 1.0 }).collect();
    Ok((y, Some([zero, one])))
}

/// Writes a table back in its original column order.
pub fn write_csv(path: impl AsRef<Path>, table: &CsvTable) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(file, table)
}

/// Shortest round-tripping text for `v`, in exponent form at extreme magnitudes.
fn format_number(v: f64) -> String {
    let magnitude = v.abs();
    if magnitude != 0.0 && !(1e-5..1e16).contains(&magnitude) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

pub fn write_csv_to<W: Write>(writer: W, table: &CsvTable) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(&table.headers)?;
    let data = &table.dataset;
    for i in 0..data.n() {
        let mut features = data.row(i).into_iter();
        let mut cells = Vec::with_capacity(table.headers.len());
        for j in 0..table.headers.len() {
            if j == table.label_index {
                let y = data.y()[i];
                cells.push(match &table.label_classes {
                    Some(classes) => classes[usize::from(y != 0.0)].clone(),
                    None => format_number(y),
                });
            } else {
                cells.push(format_number(*features.next().expect("row width matches header")));
            }
        }
        wtr.write_record(&cells)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes trajectory records with columns
/// `config_label,seed,iteration,log_sq_error`.
pub fn write_trajectory_csv<W: Write>(writer: W, records: &[TrajectoryRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in records {
        wtr.serialize(r)?;
    }
    if records.is_empty() {
        wtr.write_record(["config_label", "seed", "iteration", "log_sq_error"])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes failed runs with columns `config_label,seed,iteration,message`.
pub fn write_failures_csv<W: Write>(writer: W, failures: &[FailedRun]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["config_label", "seed", "iteration", "message"])?;
    for f in failures {
        let iteration = f.iteration.map(|i| i.to_string()).unwrap_or_default();
        wtr.write_record([f.config_label.as_str(), &f.seed.to_string(), &iteration, &f.message])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Auditable record of one run, written after all other outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub output_dir: String,
    /// Human-readable description of what was run.
    pub spec: String,
    pub config: serde_json::Value,
    pub started_at: String,
    pub timestamp: String,
    pub artifact_version: String,
    /// SHA-256 over the named inputs, in order.
    pub input_hash: String,
    pub outputs: Vec<String>,
}

/// Current UTC time in RFC 3339 form.
pub fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// SHA-256 of a sequence of byte blobs, each length-prefixed so that
/// boundaries are unambiguous.
pub fn content_hash<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    hex::encode(hasher.finalize())
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &RunManifest) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, manifest)?;
    file.write_all(b"\n")?;
    Ok(())
}
