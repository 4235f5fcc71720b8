//! Randomness addressed by lane and period.
//!
//! Each (lane, period) pair owns a fixed block of a ChaCha stream, so the
//! draws a lane sees in a period do not depend on how many draws happened
//! before. Two worlds that differ only in one user's declared bid therefore
//! see exactly the same arrivals wherever their lanes are both empty.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform draws for one lane in one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    /// Compared with the arrival probability.
    pub arrival: f64,
    /// Quantile of the true value.
    pub true_u: f64,
    /// Quantile of the declared bid when it is drawn independently.
    pub declared_u: f64,
}

#[derive(Debug, Clone)]
pub struct LaneNoise {
    base: ChaCha8Rng,
}

impl LaneNoise {
    pub fn new(seed: u64) -> Self {
        Self { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn draw(&self, lane: usize, period: u64) -> Draw {
        let mut rng = self.base.clone();
        rng.set_stream(lane as u64);
        // One 16-word block per period.
        rng.set_word_pos(u128::from(period) * 16);
        Draw { arrival: rng.random(), true_u: rng.random(), declared_u: rng.random() }
    }
}
