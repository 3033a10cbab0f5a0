//! Deterministic random streams.
//!
//! Every parallel task derives its own generator from the run seed and a
//! small tuple of integer identifiers (chain, player, game, decision...).
//! Results therefore depend only on `(seed, ids)` and never on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a path of identifiers into a single 64-bit key.
pub fn derive_seed(seed: u64, ids: &[u64]) -> u64 {
    ids.iter()
        .fold(splitmix64(seed), |acc, &id| splitmix64(acc ^ splitmix64(id)))
}

/// Independent generator for the task identified by `ids`.
pub fn substream(seed: u64, ids: &[u64]) -> SimRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, ids))
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit(rng: &mut SimRng) -> f64 {
    use rand::RngCore;
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
