//! Deterministic seed derivation: every sample index gets its own ChaCha
//! stream, so results do not depend on how samples are batched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// FNV-1a, stable across platforms and releases.
pub fn hash_id(s: &str) -> u64 {
    s.bytes().fold(0xcbf29ce484222325, |h, b| (h ^ b as u64).wrapping_mul(0x100000001b3))
}

/// Seed for `(seed, tag)`, mixed with splitmix64.
pub fn derive(seed: u64, tag: &str) -> u64 {
    let mut z = seed ^ hash_id(tag);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
