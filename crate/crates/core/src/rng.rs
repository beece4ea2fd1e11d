//! Keyed generator derivation.
//!
//! Every random decision gets its own generator whose seed is a SHA-256 digest
//! of `(domain, seed, key, index)`. No generator state is shared between
//! records, so results do not depend on scheduling or worker count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_rng(domain: &str, seed: u64, key: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update((domain.len() as u64).to_le_bytes());
    h.update(domain.as_bytes());
    h.update(seed.to_le_bytes());
    h.update((key.len() as u64).to_le_bytes());
    h.update(key.as_bytes());
    h.update(index.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}
