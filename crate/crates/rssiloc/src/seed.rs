//! Deterministic seed derivation.
//!
//! Every random process in this crate draws from a ChaCha stream whose seed is
//! derived from one master seed. The splitter is SplitMix64 applied to
//! `master XOR (stream * 0x9E3779B97F4A7C15)`: distinct stream indices give
//! statistically independent seeds, and because each consumer's seed is fixed
//! up front, running consumers in parallel or in sequence cannot change any
//! result.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Derives the seed for sub-stream `stream` of master seed `master`.
#[must_use]
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ stream.wrapping_mul(GOLDEN_GAMMA))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
