//! Seeded random streams.
//!
//! Every stochastic step draws from a stream keyed by `(seed, domain, index)`,
//! so results do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

#[inline]
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream for work item `index` in `domain`.
pub fn stream(seed: u64, domain: u64, index: u64) -> Stream {
    let key = splitmix(splitmix(seed ^ splitmix(domain)) ^ index);
    let mut s = ChaCha8Rng::seed_from_u64(key);
    s.set_stream(domain);
    s
}

/// Derives a child seed, used when an experiment fans out into sub-runs.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    splitmix(seed ^ splitmix(index.wrapping_add(0x5EED)))
}
