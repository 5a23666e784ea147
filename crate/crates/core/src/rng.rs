//! Deterministic random substreams derived from one master seed.
//!
//! Every consumer (positions, weights, one weight-layer pair, ...) draws from
//! its own ChaCha stream, so results do not depend on iteration order or on
//! how work is spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags occupying the top byte of a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Stream {
    Positions = 1,
    Weights = 2,
    LayerPair = 3,
    Naive = 4,
    Radii = 5,
    Angles = 6,
    Misc = 7,
}

pub fn substream(seed: u64, purpose: Stream, key: u64) -> ChaCha8Rng {
    debug_assert!(key < 1 << 56);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) | key);
    rng
}

/// Stream key for weight layers `i <= j` in attempt `attempt`.
pub(crate) fn layer_pair_key(i: usize, j: usize, attempt: u32) -> u64 {
    ((attempt as u64) << 40) | ((i as u64) << 20) | j as u64
}
