//! Counter-based RNG substream derivation.
//!
//! Every random quantity in a run is drawn from a substream keyed by
//! `(seed, drop index, purpose tag, ids...)`. Substreams are independent of
//! execution order, so drops can run in parallel and still produce
//! bit-identical output for a fixed seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a hash of a purpose tag. Stable across platforms and Rust versions.
fn fnv1a(tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 step, used to expand the key material into a 256-bit seed.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic ChaCha substream for `(seed, drop, tag, ids)`.
///
/// The key schedule folds each component through SplitMix64 so that nearby
/// keys (consecutive drops, consecutive user indices) yield unrelated
/// streams.
pub fn substream(seed: u64, drop: u64, tag: &str, ids: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x6a09_e667_f3bc_c908;
    let mut acc = splitmix64(&mut state);
    state ^= drop.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    acc ^= splitmix64(&mut state);
    state ^= fnv1a(tag);
    acc ^= splitmix64(&mut state);
    for id in ids {
        state ^= id.wrapping_add(0x1f83_d9ab_fb41_bd6b);
        acc ^= splitmix64(&mut state);
    }
    state ^= acc;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
