//! Versioned JSON report documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::levelset::Probe;
use crate::report::{IterRecord, SolveReport};

pub const SCHEMA_VERSION: &str = "1.0";

/// JSON schema every [`ReportDocument`] validates against.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

/// One solver run: the summary plus an optional per-iteration trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    #[serde(flatten)]
    pub report: SolveReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<IterRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetSummary {
    pub delta: f64,
    pub mu: f64,
    pub phi: f64,
    /// `|φ − δ| / max(1, δ)`
    pub rel_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub command: String,
    /// Echo of the run configuration.
    pub config: serde_json::Value,
    pub runs: Vec<RunRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levelset: Option<LevelSetSummary>,
}

impl ReportDocument {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            config,
            runs: Vec::new(),
            levelset: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Writes the document as pretty-printed JSON.
pub fn emit_report(doc: &ReportDocument, path: &Path) -> Result<()> {
    let mut text = doc.to_json()?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
