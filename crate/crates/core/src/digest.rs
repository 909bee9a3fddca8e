use alloc::string::String;
use core::fmt::Write;

use sha2::{Digest, Sha256};

/// SHA-256 over a sequence of length-prefixed fields, so that field
/// boundaries can never be confused (`("ab", "c")` and `("a", "bc")` differ).
pub(crate) struct FieldHasher(Sha256);

impl FieldHasher {
    pub(crate) fn new(domain: &str) -> Self {
        let mut hasher = FieldHasher(Sha256::new());
        hasher.field(domain);
        hasher
    }

    pub(crate) fn field(&mut self, value: &str) -> &mut Self {
        self.0.update((value.len() as u64).to_le_bytes());
        self.0.update(value.as_bytes());
        self
    }

    pub(crate) fn number(&mut self, value: u64) -> &mut Self {
        self.0.update(value.to_le_bytes());
        self
    }

    pub(crate) fn finish_hex(self) -> String {
        let bytes = self.0.finalize();
        let mut out = String::with_capacity(bytes.len() * 2);
        for b in bytes.iter() {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}
