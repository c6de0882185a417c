//! Seeded random streams.
//!
//! Every randomized routine draws from a ChaCha8 stream derived from the
//! user seed plus a path of salts (spin, trial index, spike index, …), so
//! results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for `(seed, salts...)`.
pub fn derived_rng(seed: u64, salts: &[u64]) -> ChaCha8Rng {
    let key = salts
        .iter()
        .fold(splitmix64(seed), |acc, &salt| splitmix64(acc ^ splitmix64(salt)));
    ChaCha8Rng::seed_from_u64(key)
}

/// Stream used directly for a top-level seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
