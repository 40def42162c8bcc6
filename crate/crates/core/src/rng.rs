//! Seeded, splittable randomness.
//!
//! All stochastic stages draw from ChaCha20 streams. Independent streams are
//! split off a parent seed with a SplitMix64 finalizer, so a run is a pure
//! function of its root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Identifier recorded in model files and manifests.
pub const RNG_ALGORITHM: &str = "chacha20+splitmix64";

pub type Rng = ChaCha20Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed of child stream `stream` from `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
