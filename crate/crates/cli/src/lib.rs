//! Batch experiment runner: reads a TOML config, runs the named experiment with
//! its seed, writes CSV/JSON outputs and a manifest with SHA-256 digests.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{parse_config, Diagnostic, ExperimentConfig, KINDS};
use output::{artifact_path, json_artifact, write_artifacts, OutputEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", render(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("{kind} experiment failed: {source}")]
    Experiment { kind: String, source: thermiq::Error },
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
}

fn render(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            _ => EXIT_RUNTIME,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub kind: String,
    pub config: serde_json::Value,
    pub version: String,
    pub duration_seconds: f64,
    pub seeds: Vec<u64>,
    /// Random streams split off the seed (trajectory or test index), if any.
    pub streams: Option<u64>,
    pub outputs: Vec<OutputEntry>,
}

/// Reads and validates a config file. An unreadable file is a validation failure.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(vec![Diagnostic { field: String::new(), message: format!("cannot read {}: {e}", path.display()) }]))?;
    parse_config(&text).map_err(CliError::Invalid)
}

/// Runs the experiment, writes its files and the manifest `<output>.manifest.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
    let start = Instant::now();
    let outcome = experiments::execute(cfg).map_err(|source| CliError::Experiment { kind: cfg.kind().into(), source })?;
    let prefix = PathBuf::from(&cfg.output);
    let outputs = write_artifacts(&prefix, &outcome.artifacts)
        .map_err(|source| CliError::Io { context: format!("writing outputs under {}", prefix.display()), source })?;
    let manifest = RunManifest {
        kind: cfg.kind().into(),
        config: serde_json::to_value(cfg).expect("config serializes"),
        version: env!("CARGO_PKG_VERSION").into(),
        duration_seconds: start.elapsed().as_secs_f64(),
        seeds: vec![cfg.seed],
        streams: outcome.streams,
        outputs,
    };
    let file = json_artifact("manifest", &manifest);
    std::fs::write(artifact_path(&prefix, &file.suffix), &file.bytes)
        .map_err(|source| CliError::Io { context: "writing manifest".into(), source })?;
    Ok(manifest)
}

/// Recomputes the digest of every output listed in a manifest; returns the
/// paths whose contents no longer match.
pub fn verify_manifest(manifest: &RunManifest) -> Vec<String> {
    manifest
        .outputs
        .iter()
        .filter(|o| std::fs::read(&o.path).map(|b| output::sha256_hex(&b) != o.sha256).unwrap_or(true))
        .map(|o| o.path.clone())
        .collect()
}
