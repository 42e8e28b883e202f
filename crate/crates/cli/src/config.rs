//! Resolved run configuration embedded in every report.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Everything a report needs to be reproduced: the tool invocation, the
/// input identity, and all numeric knobs. Serialized verbatim into CSV
/// comment headers and JSON reports; contains no timestamps so reruns are
/// byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub tool: String,
    pub input: String,
    /// Content hash of the polytope file (blob-framed SHA-256, hex).
    pub content_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dilation: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<(u32, u32)>,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub seed: u64,
    pub threads: usize,
    pub allow_flagged: bool,
}

/// Git-blob style content hash: SHA-256 over `blob {len}\0{bytes}`.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("blob {}\0", bytes.len()).as_bytes());
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Print a float with 17 significant digits so cross-language reproduction
/// checks can compare output exactly.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}
