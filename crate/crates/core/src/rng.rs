//! Counter-based randomness.
//!
//! Every random coordinate is drawn from a ChaCha stream selected by
//! `(seed, coordinate identity)`. A coordinate identity is derived from the
//! labels of the vertices it is indexed by, so the same coordinate is
//! reproduced no matter which vertex set, thread or traversal order asks for it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Stable 64-bit key of a vertex label (FNV-1a).
pub fn label_key(label: &str) -> u64 {
    label.bytes().fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// SplitMix64 finalizer.
pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key of a subset given the keys of its vertices in label order.
pub fn subset_key(vertex_keys: impl IntoIterator<Item = u64>) -> u64 {
    vertex_keys.into_iter().fold(0x5eed_5eed_5eed_5eed, |acc, k| mix(acc ^ k))
}

/// Derives an independent child seed, e.g. one per Monte Carlo trial.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix(mix(seed) ^ stream.rotate_left(17) ^ 0xa076_1d64_78bd_642f)
}

/// The generator for one coordinate (or any other keyed draw).
pub fn stream_rng(seed: u64, key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng
}
