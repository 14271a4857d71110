//! Run manifest: the parsed config echoed back, a content hash of the
//! inputs, and the artifact list. The wall-clock timestamp is the single
//! nondeterministic field and sits alone at the top level, so reruns are
//! byte-identical modulo that one line.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub subcommand: &'a str,
    pub config: &'a ExperimentConfig,
    pub input_sha256: String,
    pub artifacts: Vec<String>,
    pub timestamp_unix: u64,
}

pub fn input_hash(config_bytes: &[u8], potential_file: Option<&[u8]>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(config_bytes);
    if let Some(extra) = potential_file {
        hasher.update([0u8]);
        hasher.update(extra);
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        let _ = write!(out, "{byte:02x}");
    }
    out
}

pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
