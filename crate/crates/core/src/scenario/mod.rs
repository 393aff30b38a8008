//! Scenario runner: resolves a configuration, runs one scenario, and emits
//! CSV, JSON and SVG outputs together with a manifest of content digests.
//!
//! Every output is a pure function of the resolved configuration. Random
//! streams are derived from the seed and a task index, so worker count and
//! scheduling never change a byte.

mod claims;
mod config;
mod eraser;
mod plot;
mod schema;
mod stats;
mod wave;

pub use claims::{claims_suite, Claim, ClaimsDocument};
pub use config::{
    parse_angle, parse_formats, ConfigError, EraserParams, Format, PartialConfig, Scenario, ScenarioConfig,
    WaveParams, DEFAULT_CHSH_STEP, DEFAULT_SEED, DEFAULT_TRIALS,
};
pub use plot::{read_plot_input, render_svg, PlotError, PlotInput};
pub use schema::{schema, schema_for_file, SCHEMAS};

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuit::CircuitError;
use crate::hilbert::HilbertError;
use crate::inference::{InferenceError, Mode, TestReport, Verdict};
use crate::pilotwave::PilotError;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Pilot(#[from] PilotError),
    #[error(transparent)]
    Hilbert(#[from] HilbertError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// One emitted file, held in memory until written.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Everything a scenario produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
    /// False when a claims-suite verdict differs from its expectation.
    pub claims_ok: bool,
}

impl RunOutput {
    fn new() -> Self {
        RunOutput {
            files: Vec::new(),
            claims_ok: true,
        }
    }

    fn add_text(&mut self, name: &str, text: String) {
        self.files.push(OutputFile {
            name: name.to_string(),
            bytes: text.into_bytes(),
        });
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
        text.push('\n');
        self.add_text(name, text);
    }

    pub fn file(&self, name: &str) -> Option<&OutputFile> {
        self.files.iter().find(|f| f.name == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: Scenario,
    pub config: ScenarioConfig,
    pub files: Vec<ManifestEntry>,
}

/// Runs the configured scenario. Files whose format is not requested are
/// dropped.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    config.validate()?;
    let mut out = match config.scenario {
        Scenario::Eraser => eraser::run(config)?,
        Scenario::DoubleSlit | Scenario::FreePacket | Scenario::Harmonic => wave::run(config)?,
        Scenario::Repeatability => stats::repeatability(config)?,
        Scenario::BellChsh => stats::bell_chsh(config)?,
        Scenario::ClaimsSuite => claims::run(config)?,
    };
    out.files
        .retain(|f| Format::of_file(&f.name).map_or(true, |k| config.formats.contains(&k)));
    Ok(out)
}

/// The manifest describing `out`.
pub fn manifest(config: &ScenarioConfig, out: &RunOutput) -> Manifest {
    Manifest {
        scenario: config.scenario,
        config: config.clone(),
        files: out
            .files
            .iter()
            .map(|f| ManifestEntry {
                path: f.name.clone(),
                bytes: f.bytes.len(),
                sha256: sha256_hex(&f.bytes),
            })
            .collect(),
    }
}

/// Writes every output and `manifest.json` into `dir`, creating it if
/// needed. Returns the manifest.
pub fn write_outputs(config: &ScenarioConfig, out: &RunOutput, dir: &Path) -> Result<Manifest> {
    let io_err = |p: &Path| {
        let path = p.display().to_string();
        move |source| ScenarioError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for f in &out.files {
        let p = dir.join(&f.name);
        fs::write(&p, &f.bytes).map_err(io_err(&p))?;
    }
    let m = manifest(config, out);
    let p = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
    text.push('\n');
    fs::write(&p, text).map_err(io_err(&p))?;
    Ok(m)
}

pub(crate) fn verdict_of(holds: bool) -> Verdict {
    if holds {
        Verdict::Satisfied
    } else {
        Verdict::Violated
    }
}

/// Report for a deterministic property check.
pub(crate) fn check_report(test: &str, statistic: f64, threshold: f64, holds: bool, n: usize, mode: Mode) -> TestReport {
    TestReport {
        test: test.to_string(),
        statistic,
        threshold,
        verdict: verdict_of(holds),
        n,
        mode,
        details: json!({}),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(s: Scenario) -> ScenarioConfig {
        ScenarioConfig::resolve(&PartialConfig {
            scenario: Some(s),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn format_filter_drops_unrequested_files() {
        let mut c = config(Scenario::Repeatability);
        c.formats = vec![Format::Json];
        let out = run(&c).unwrap();
        assert!(out.files.iter().all(|f| f.name.ends_with(".json")));
        assert!(out.file("reports.json").is_some());
    }

    #[test]
    fn manifest_digests_match_contents() {
        let c = config(Scenario::Repeatability);
        let out = run(&c).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = write_outputs(&c, &out, dir.path()).unwrap();
        for e in &m.files {
            let bytes = fs::read(dir.path().join(&e.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), e.sha256);
            assert_eq!(bytes.len(), e.bytes);
        }
        assert!(dir.path().join("manifest.json").exists());
    }

    #[test]
    fn digest_reference_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
