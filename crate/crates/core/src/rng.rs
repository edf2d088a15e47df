//! Seeding helpers. Every random draw in the crate goes through a
//! [`ChaCha8Rng`] built here, so results depend only on the seeds passed in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a master seed and an ordinal.
///
/// Used for per-period and per-transition streams so that work units can be
/// evaluated in any order and still reproduce a sequential run.
pub fn derive(master: u64, ordinal: u64) -> u64 {
    splitmix64(splitmix64(master) ^ ordinal.wrapping_mul(0xD1B5_4A32_D192_ED03))
}
