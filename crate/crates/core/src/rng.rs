//! Seed handling.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), a
//! counter-based stream cipher generator. A 64-bit seed is expanded into the
//! 256-bit key with `SeedableRng::seed_from_u64`, and independent substreams
//! of one key are selected with the ChaCha stream (nonce) word, so
//! `(seed, stream)` pins the whole output sequence.
//!
//! Derived seeds (per trial, per channel redraw) use the SplitMix64 finalizer
//! on `parent ^ (index + 1) * GOLDEN`, which is cheap and portable.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `parent`.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    mix64(parent ^ index.wrapping_add(1).wrapping_mul(GOLDEN))
}

/// Generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
