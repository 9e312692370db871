//! Stable seed derivation.
//!
//! Every stochastic stage draws its generator from `(master, stage, index)` so
//! that adding or reordering stages never perturbs the streams of the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derives a sub-seed from a master seed, a stage name and an index.
pub fn derive(master: u64, stage: &str, index: u64) -> u64 {
    let a = splitmix64(master ^ fnv1a(stage.as_bytes()));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x632B_E59B_D9B4_E019)))
}

/// Generator seeded directly from a 64-bit value.
pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for `(master, stage, index)`.
pub fn stage_rng(master: u64, stage: &str, index: u64) -> Rng {
    rng(derive(master, stage, index))
}
