//! Counter-based random substreams.
//!
//! Every stochastic draw in the crate is keyed by `(seed, domain, index)` and
//! produced by a ChaCha8 generator whose stream id carries the index. Draws
//! therefore never depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags separating independent uses of the master seed.
pub mod domain {
    pub const TOPOLOGY: u64 = 0x746f_706f;
    pub const WEIGHTS: u64 = 0x7765_6967;
    pub const CHANNEL: u64 = 0x6368_616e;
    pub const DEPLOYMENT: u64 = 0x6465_706c;
    pub const SELFTEST: u64 = 0x7365_6c66;
}

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag))
}

/// A generator for substream `index` of `(seed, domain)`.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain));
    rng.set_stream(index);
    rng
}
