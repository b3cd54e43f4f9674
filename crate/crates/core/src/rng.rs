//! Seeded RNG stream derivation.
//!
//! Batch generation hands every frame its own `ChaCha8Rng` derived from
//! `(master_seed, stream_index)`. ChaCha8 is stable across `rand` releases and
//! platforms, so output bytes depend only on the seed pair, never on worker
//! count or scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step; the standard constants.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent RNG stream for `(master_seed, stream)`.
///
/// The 256-bit ChaCha seed is expanded with SplitMix64 from a mix of the two
/// inputs, so nearby stream indices produce unrelated sequences.
pub fn derive_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ splitmix64(&mut { stream });
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Uniform draw in `[lo, hi]` that tolerates degenerate (`lo == hi`) and
/// reversed intervals.
pub fn uniform_in(rng: &mut impl rand::Rng, lo: f64, hi: f64) -> f64 {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Uniform integer draw in `[lo, hi]`, tolerating reversed bounds.
pub fn uniform_in_u32(rng: &mut impl rand::Rng, lo: u32, hi: u32) -> u32 {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    rng.random_range(lo..=hi)
}
