use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::model::ModelParams;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 16 hex digits of the SHA-256 of the compact JSON encoding of the
/// parameters.
pub fn params_hash(params: &ModelParams) -> String {
    let json = serde_json::to_string(params).expect("model parameters serialize");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Sidecar metadata written next to every output table.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub params_hash: String,
    pub seed: Option<u64>,
    /// Command-specific fields (caps, overflow mass, rejection counts, ...).
    pub details: serde_json::Value,
}

impl RunMetadata {
    pub fn new(command: &str, params: &ModelParams, seed: Option<u64>) -> Self {
        Self {
            tool: "hpbranch",
            version: TOOL_VERSION,
            command: command.to_string(),
            params_hash: params_hash(params),
            seed,
            details: serde_json::Value::Null,
        }
    }

    pub fn with_details(mut self, details: serde_json::Value) -> Self {
        self.details = details;
        self
    }

    /// One-line comment placed before the header of CSV outputs.
    pub fn comment_line(&self) -> String {
        let seed = self
            .seed
            .map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# {} {} command={} params_hash={} seed={}",
            self.tool, self.version, self.command, self.params_hash, seed
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metadata serializes");
        s.push('\n');
        s
    }
}
