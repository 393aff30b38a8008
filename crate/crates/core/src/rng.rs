//! Seeded random streams.
//!
//! Streams come from a counter-based ChaCha8 generator. Each task gets its
//! own stream selected by `(master seed, task index)`, so results do not
//! depend on how tasks are scheduled across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RngStream = ChaCha8Rng;

/// The stream for task `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Distinct stream families for independent purposes under one master seed.
pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    // FNV-1a over the purpose tag, mixed into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in purpose.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h.rotate_left(17)
}
