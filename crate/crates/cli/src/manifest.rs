//! Run manifests recorded next to every output.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the config file bytes (or of the option string for runs
    /// without a config file), lowercase hex.
    pub config_digest: String,
    pub master_seed: u64,
    pub version: String,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config_digest: String, master_seed: u64, wall_clock_seconds: f64) -> Self {
        Self {
            command: command.to_string(),
            config_digest,
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds,
        }
    }
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
