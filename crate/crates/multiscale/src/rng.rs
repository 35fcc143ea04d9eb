//! Counter-based random streams.
//!
//! Every random draw in a run is addressed by `(seed, stream, round)`: the
//! generator is a ChaCha block cipher positioned at a word offset derived from
//! the round index, so any round's randomness can be regenerated without
//! replaying the rounds before it. Runs with the same seed are bit-identical
//! regardless of scheduling, and distinct streams (arm sampling vs the
//! environment) never overlap, so an environment produces the same trace no
//! matter which learner consumes it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id for the learner's own arm sampling.
pub const STREAM_ARM: u64 = 0;
/// Stream id for environment randomness (reward draws, value traces).
pub const STREAM_ENV: u64 = 1;

/// Words of ChaCha output reserved per round. Generous: no consumer draws
/// more than a handful of values per round per buyer.
const WORDS_PER_ROUND: u128 = 64;

/// A keyed stream of per-round generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededStream {
    seed: u64,
    stream: u64,
}

impl SeededStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Generator positioned at `round`'s private block of the stream.
    pub fn at_round(&self, round: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(round as u128 * WORDS_PER_ROUND);
        rng
    }

    /// Uniform f64 in [0, 1) for this round (first draw of the block).
    pub fn uniform_at(&self, round: u64) -> f64 {
        self.at_round(round).gen::<f64>()
    }
}

/// Inverse-CDF sample from a probability vector.
///
/// Entries must be non-negative; the vector is treated as summing to one.
/// A `u` beyond the accumulated mass (only possible through rounding) falls
/// back to the last arm with positive probability.
pub fn sample_categorical(probs: &[f64], u: f64) -> usize {
    debug_assert!(!probs.is_empty());
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}
