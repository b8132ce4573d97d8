//! Report shapes and output plumbing.
//!
//! Every JSON report embeds the manifest that produced it, so a report
//! file alone is enough to re-run the command. Files are written to a
//! temp file in the destination directory and renamed into place;
//! readers never observe partial output.

use std::io::Write;
use std::path::Path;

use losstest_core::hypothesis::{Decision, TestConfig, TestOutcome};
use losstest_core::scenario::{ExperimentReport, ScenarioSpec};
use serde::{Deserialize, Serialize};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// The reproducible identity of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_path: Option<String>,
    pub config: ManifestConfig,
    pub master_seed: u64,
    pub artifact_version: String,
    /// ISO-8601; the only field allowed to differ between identical runs.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, input_path: Option<&Path>, config: ManifestConfig, master_seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            input_path: input_path.map(|p| p.display().to_string()),
            config,
            master_seed,
            artifact_version: ARTIFACT_VERSION.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }
}

/// Command-specific configuration embedded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestConfig {
    /// Used by both the single test and each element of a scan; a scan
    /// entry carries the exact per-feature configuration it ran.
    Test(TestConfig),
    Simulate(SimulateConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub spec: ScenarioSpec,
    pub n_grid: Vec<usize>,
    pub trials: usize,
}

/// JSON report of a single subset test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub threshold: f64,
    pub k: usize,
    pub n_eval: usize,
    pub decision: Decision,
    pub tie_count: usize,
    pub manifest: RunManifest,
}

impl TestReport {
    pub fn from_outcome(outcome: &TestOutcome, manifest: RunManifest) -> Self {
        TestReport {
            statistic: outcome.statistic,
            threshold: outcome.threshold,
            k: outcome.k_used,
            n_eval: outcome.n_eval,
            decision: outcome.decision,
            tie_count: outcome.tie_count,
            manifest,
        }
    }
}

/// One element of the JSON array a scan emits: the feature left out and
/// the test of the remaining features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocoEntry {
    pub feature: usize,
    #[serde(flatten)]
    pub report: TestReport,
}

/// JSON wrapper for a Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub experiment: ExperimentReport,
    pub manifest: RunManifest,
}

pub fn to_json(report: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize infallibly");
    s.push('\n');
    s
}

/// Writes via a sibling temp file plus rename, or to stdout when no
/// path is given.
pub fn write_output(path: Option<&Path>, content: &str) -> std::io::Result<()> {
    match path {
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(content.as_bytes())?;
            out.flush()
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(content.as_bytes())?;
            tmp.flush()?;
            tmp.persist(path).map_err(|e| e.error)?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use losstest_core::data::{FeatureSubset, LabelKind};

    fn manifest() -> RunManifest {
        let config = TestConfig::new(FeatureSubset::new(vec![0]).unwrap(), LabelKind::Classification);
        RunManifest::new("test", Some(Path::new("data.csv")), ManifestConfig::Test(config), 7)
    }

    #[test]
    fn manifest_carries_version_and_timestamp() {
        let m = manifest();
        assert_eq!(m.artifact_version, ARTIFACT_VERSION);
        assert_eq!(m.command, "test");
        assert_eq!(m.input_path.as_deref(), Some("data.csv"));
        // chrono's RFC 3339 output carries a date, a time and an offset
        assert!(m.timestamp.contains('T'), "{}", m.timestamp);
    }

    #[test]
    fn manifest_roundtrips_through_json() {
        let m = manifest();
        let json = serde_json::to_string(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn decision_names_are_snake_case() {
        let json = serde_json::to_string(&Decision::AcceptNull).unwrap();
        assert_eq!(json, "\"accept_null\"");
        let json = serde_json::to_string(&Decision::RejectNull).unwrap();
        assert_eq!(json, "\"reject_null\"");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_output(Some(&path), "first\n").unwrap();
        write_output(Some(&path), "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
        // no temp files left behind
        let residue: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.file_name() != "report.json")
            .collect();
        assert!(residue.is_empty(), "{residue:?}");
    }
}
