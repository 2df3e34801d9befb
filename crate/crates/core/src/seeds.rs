//! Deterministic seed derivation so every stage can be reproduced from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for a named stream under `root`.
pub fn derive(root: u64, stream: &str) -> u64 {
    let mut h = mix(root);
    for b in stream.bytes() {
        h = mix(h ^ u64::from(b));
    }
    h
}

/// Child seed for a numbered sub-stream.
pub fn derive_indexed(root: u64, index: u64) -> u64 {
    mix(mix(root) ^ mix(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
