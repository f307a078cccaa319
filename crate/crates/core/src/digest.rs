//! Content digests embedded in artifact files for reproducibility checks.

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Hex SHA-256 of raw bytes.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

/// Hex SHA-256 of the canonical JSON serialization of `value`.
///
/// All serializers in this crate stream fields in a fixed order, so equal
/// values always digest equally.
pub fn digest_json<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_string(value).expect("serialization is infallible for crate types");
    digest_bytes(json.as_bytes())
}
