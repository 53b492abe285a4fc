//! Named random streams derived from one root seed.
//!
//! Each component draws from its own stream, so changing how much randomness
//! one component consumes never shifts another component's output.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub const GENERATION: &str = "generation";
pub const CORRUPTION: &str = "corruption";
pub const ORDERING: &str = "ordering";
pub const BLINDING: &str = "blinding";
pub const ENCODING: &str = "encoding";

/// First eight bytes of `SHA-256(root || stream)`, little-endian.
pub fn sub_seed(root: u64, stream: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(root.to_le_bytes());
    hasher.update(stream.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

pub fn stream_rng(root: u64, stream: &str) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(sub_seed(root, stream))
}
