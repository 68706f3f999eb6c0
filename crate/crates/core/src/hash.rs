//! Content hashing used to bind trajectories to the scenes they came from.

use sha2::{Digest, Sha256};

/// Incremental SHA-256 with length-prefixed fields, so that concatenation
/// ambiguities between adjacent fields cannot produce equal digests.
#[derive(Default)]
pub struct ContentHasher {
    inner: Sha256,
}

impl ContentHasher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(&mut self, bytes: &[u8]) -> &mut Self {
        self.inner.update((bytes.len() as u64).to_le_bytes());
        self.inner.update(bytes);
        self
    }

    pub fn finish_hex(self) -> String {
        format!("{:x}", self.inner.finalize())
    }
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}
