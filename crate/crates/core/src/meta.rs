//! Artifact provenance: stable hashes, derived seeds, metadata headers and
//! number formatting shared by every file writer.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_NAME: &str = "dgme";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// First 16 hex digits of SHA-256 over `text`.
pub fn stable_hash(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Independent 64-bit seed for a named sub-stream of `seed`.
pub fn derive_seed(seed: u64, stream: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(stream.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// `%.{digits}g`-style formatting: shortest of fixed and scientific notation
/// with trailing zeros removed.
pub fn format_sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return format!("{value}");
    }
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{value:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Key/value provenance carried by every artifact. Keys are kept sorted so
/// the serialized form is deterministic.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta(pub BTreeMap<String, String>);

impl Meta {
    pub fn new(seed: Option<u64>, config_hash: &str) -> Self {
        let mut m = Meta::default();
        m.set("tool", format!("{TOOL_NAME}/{TOOL_VERSION}"));
        m.set("seed", seed.map_or_else(|| "none".to_string(), |s| s.to_string()));
        m.set("config_hash", config_hash);
        m
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.0.insert(key.to_string(), value.into());
        self
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// `# key=value key=value` (values must not contain spaces).
    pub fn to_comment(&self) -> String {
        let body: Vec<String> = self.0.iter().map(|(k, v)| format!("{k}={}", v.replace(' ', "_"))).collect();
        format!("# {}", body.join(" "))
    }

    pub fn parse_comment(line: &str) -> Option<Self> {
        let body = line.strip_prefix('#')?;
        let mut m = Meta::default();
        for tok in body.split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                m.set(k, v);
            }
        }
        Some(m)
    }
}
