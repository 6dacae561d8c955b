use std::fs;
use std::path::{Path, PathBuf};

use privglm::experiments::{content_hash, now_rfc3339, write_manifest, RunManifest};

use crate::exit::CliError;

/// An output directory plus the bookkeeping needed for its manifest.
pub struct RunDir {
    pub dir: PathBuf,
    started_at: String,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), started_at: now_rfc3339(), outputs: Vec::new() })
    }

    /// Creates `name` inside the directory and records it as an output.
    pub fn file(&mut self, name: &str) -> Result<fs::File, CliError> {
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
        self.outputs.push(name.to_owned());
        Ok(file)
    }

    pub fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut file = self.file(name)?;
        serde_json::to_writer_pretty(&mut file, value).map_err(|e| CliError::io(e.to_string()))?;
        std::io::Write::write_all(&mut file, b"\n").map_err(|e| CliError::io(e.to_string()))
    }

    /// Writes `manifest.json`; call after every other output is complete.
    pub fn finish(self, run: ManifestInfo<'_>) -> Result<(), CliError> {
        let manifest = RunManifest {
            command: run.command.to_owned(),
            config_path: run.config_path.map(str::to_owned),
            seed: run.seed,
            seeds: run.seeds,
            output_dir: self.dir.display().to_string(),
            spec: run.spec,
            config: run.config,
            started_at: self.started_at,
            timestamp: now_rfc3339(),
            artifact_version: env!("CARGO_PKG_VERSION").to_owned(),
            input_hash: content_hash(run.inputs.iter().map(Vec::as_slice)),
            outputs: self.outputs,
        };
        write_manifest(self.dir.join("manifest.json"), &manifest).map_err(|e| CliError::io(e.to_string()))
    }
}

pub struct ManifestInfo<'a> {
    pub command: &'a str,
    pub config_path: Option<&'a str>,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub spec: String,
    pub config: serde_json::Value,
    /// Byte blobs identifying the inputs (resolved config, dataset bytes).
    pub inputs: Vec<Vec<u8>>,
}
