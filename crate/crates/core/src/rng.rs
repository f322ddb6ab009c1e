//! Counter-based seed derivation.
//!
//! Every stochastic stream (one bootstrap resample, one imputation chain, one
//! simulation replicate) gets its own generator derived from a master seed, a
//! domain tag and an index. Streams never share state, so the order in which
//! workers pick them up cannot change the draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags for the different consumers of randomness.
pub mod domain {
    pub const RESAMPLE: u64 = 0x5245_5341;
    pub const NULL_RESAMPLE: u64 = 0x4e55_4c4c;
    pub const IMPUTE: u64 = 0x494d_5055;
    pub const SIMULATE: u64 = 0x5349_4d55;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ domain) ^ index)
}

pub fn stream(master: u64, domain: u64, index: u64) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, domain, index))
}
