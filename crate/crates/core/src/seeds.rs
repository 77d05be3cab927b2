//! Per-purpose seed derivation.
//!
//! Every random stream in an experiment is derived from one master seed and a
//! purpose tag (plus an index), so that adding a new consumer never shifts the
//! streams of existing ones:
//!
//! `seed = mix(mix(master ^ fnv1a(tag)) ^ index * GOLDEN)`
//!
//! where `mix` is the splitmix64 finalizer. The scheme only uses fixed-width
//! integer arithmetic and is identical on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive the seed for stream `index` of purpose `tag`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    mix64(mix64(master ^ fnv1a(tag)) ^ index.wrapping_mul(GOLDEN))
}

/// Hash an arbitrary list of words into one seed.
pub fn hash_words(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x2545_F491_4F6C_DD1D, |acc, &w| mix64(acc ^ w))
}

pub fn rng_for(master: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, index))
}
