use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use splatflow::cost::LedgerReport;
use splatflow::QualityReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

impl InputFile {
    pub fn hash(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
        Ok(InputFile {
            path: path.display().to_string(),
            sha256: hex(&Sha256::digest(&bytes)),
        })
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// One JSON document per command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    /// Every setting needed to reproduce the run.
    pub config: Value,
    pub inputs: BTreeMap<String, InputFile>,
    pub outputs: BTreeMap<String, String>,
    /// Per pipeline.
    pub ledger: BTreeMap<String, LedgerReport>,
    pub quality: Option<QualityReport>,
    /// Command-specific results.
    pub details: Value,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: Value) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            ledger: BTreeMap::new(),
            quality: None,
            details: Value::Null,
            wall_time_s: 0.0,
        }
    }

    pub fn write(&self, path: Option<&Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).context("serializing report")?;
        match path {
            Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing report {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                writeln!(out, "{text}").context("writing report to stdout")
            }
        }
    }
}
