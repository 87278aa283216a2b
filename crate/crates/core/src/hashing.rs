//! Stable hashing for seeds and content-addressed artifact names.

use sha2::{Digest, Sha256};

/// Derives a 64-bit RNG seed from length-prefixed byte parts.
pub fn seed_from_parts(parts: &[&[u8]]) -> u64 {
    let digest = digest_parts(parts);
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest is 32 bytes"))
}

/// Short lowercase hex digest of a serializable value's canonical JSON.
pub fn short_hash<T: serde::Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config types serialize infallibly");
    hex::encode(&digest_parts(&[&json])[..6])
}

fn digest_parts(parts: &[&[u8]]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p);
    }
    hasher.finalize().into()
}
