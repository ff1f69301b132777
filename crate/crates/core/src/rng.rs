//! Seed derivation. Every random stream is a ChaCha8 generator keyed by a
//! root seed and a label, so no component draws from ambient entropy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// 32-byte key for `(seed, label)`.
pub fn derive_key(seed: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

/// A child seed for `(seed, label)`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let k = derive_key(seed, label);
    u64::from_le_bytes(k[..8].try_into().unwrap())
}

pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_key(seed, label))
}

/// Stream number `index` under `(seed, label)`. Used for parallel batches:
/// the result depends only on the index, never on scheduling.
pub fn substream(seed: u64, label: &str, index: u64) -> ChaCha8Rng {
    let mut rng = stream(seed, label);
    rng.set_stream(index);
    rng
}
