//! Text-prompt encoders for the text-fusion variants.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Maps a prompt to a fixed-width feature vector. Encoders are frozen.
pub trait TextEncoder: Send + Sync {
    fn spec(&self) -> TextEncoderSpec;
    fn encode(&self, text: &str) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEncoderSpec {
    pub name: String,
    pub dim: usize,
}

/// Signed feature hashing of lowercase word tokens, L2-normalized.
///
/// Stands in for a pretrained language model when none is plugged in; two
/// prompts sharing words share feature mass.
#[derive(Debug, Clone)]
pub struct HashingTextEncoder {
    dim: usize,
}

impl HashingTextEncoder {
    pub const NAME: &'static str = "hashing";

    pub fn new(dim: usize) -> Self {
        assert!(dim > 0);
        Self { dim }
    }
}

impl Default for HashingTextEncoder {
    /// Same width as a base-size transformer encoder.
    fn default() -> Self {
        Self::new(768)
    }
}

impl TextEncoder for HashingTextEncoder {
    fn spec(&self) -> TextEncoderSpec {
        TextEncoderSpec {
            name: Self::NAME.to_string(),
            dim: self.dim,
        }
    }

    fn encode(&self, text: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for token in text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let digest = Sha256::digest(token.to_lowercase().as_bytes());
            let bucket = u64::from_le_bytes(digest[..8].try_into().expect("digest width")) as usize % self.dim;
            let sign = if digest[8] & 1 == 0 { 1.0 } else { -1.0 };
            out[bucket] += sign;
        }
        let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|v| *v /= norm);
        }
        out
    }
}
