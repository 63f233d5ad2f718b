//! Deterministic expansion of one run seed into independent random streams.
//!
//! Every stochastic consumer asks for its own stream keyed by a purpose tag
//! and a list of indices, so adding a new consumer never shifts the draws
//! seen by an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Returns the generator for `(seed, tag, indices)`.
pub fn stream(seed: u64, tag: &str, indices: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive(seed, tag, indices))
}

/// Derives a child 64-bit seed, e.g. to hand to an API that takes a plain seed.
pub fn child_seed(seed: u64, tag: &str, indices: &[u64]) -> u64 {
    let bytes = derive(seed, tag, indices);
    u64::from_le_bytes(bytes[..8].try_into().expect("digest has 32 bytes"))
}

fn derive(seed: u64, tag: &str, indices: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((tag.len() as u64).to_le_bytes());
    hasher.update(tag.as_bytes());
    for i in indices {
        hasher.update(i.to_le_bytes());
    }
    hasher.finalize().into()
}
