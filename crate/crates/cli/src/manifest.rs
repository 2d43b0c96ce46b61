//! Reproducibility envelope attached to every report.

use std::path::Path;

use anyhow::{Context, Result};
use confound_core::fixtures;
use serde::Serialize;
use sha2::{Digest, Sha256};

const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: Vec::new(),
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    /// Reads an input file, or a bundled fixture named `builtin:<name>`,
    /// and records the digest of the bytes read.
    pub fn read_input(&mut self, path: &str) -> Result<Vec<u8>> {
        let bytes = match path.strip_prefix(BUILTIN_PREFIX) {
            Some(name) => fixtures::builtin(name)
                .with_context(|| {
                    format!(
                        "unknown bundled fixture `{name}` (available: {})",
                        fixtures::BUILTIN_NAMES.join(", ")
                    )
                })?
                .as_bytes()
                .to_vec(),
            None => std::fs::read(Path::new(path)).with_context(|| format!("cannot read `{path}`"))?,
        };
        self.inputs.push(InputDigest {
            path: path.to_string(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &str) -> Result<String> {
        let bytes = self.read_input(path)?;
        String::from_utf8(bytes).with_context(|| format!("`{path}` is not UTF-8"))
    }

    /// `# key: value` lines for appending to text output.
    pub fn to_comment_lines(&self) -> String {
        let mut out = format!("# command: {}\n", self.command);
        for input in &self.inputs {
            out.push_str(&format!("# input: {} sha256:{}\n", input.path, input.sha256));
        }
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed: {seed}\n"));
        }
        out.push_str(&format!("# version: {}\n", self.version));
        out.push_str(&format!("# timestamp: {}\n", self.timestamp));
        out
    }
}
