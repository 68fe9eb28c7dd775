//! Seeded randomness.
//!
//! Every stochastic routine draws from a [`ChaCha8Rng`] built with
//! `SeedableRng::seed_from_u64`. ChaCha output is specified bit-for-bit and
//! independent of platform endianness, so a given seed reproduces the same
//! shot records everywhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut hash: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one matrix cell, a pure function of the global seed and the two
/// sample identifiers. Evaluation order never changes the result.
pub fn derive_seed(seed: u64, row_id: &str, col_id: &str) -> u64 {
    let mut h = fnv1a(FNV_OFFSET, &seed.to_le_bytes());
    h = fnv1a(h, row_id.as_bytes());
    // separator keeps ("ab","c") and ("a","bc") apart
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, col_id.as_bytes());
    mix(h)
}

/// Seed for the `index`-th item of a stream rooted at `seed`.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    mix(mix(seed) ^ index.wrapping_mul(0xd605_bbb5_8c8a_bbc3))
}
