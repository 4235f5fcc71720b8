//! Monte-Carlo absorption oracle.
//!
//! The samplers here move lanes one by one (service the moving lane, then
//! draw arrivals on every open lane) and never consult the closed-form
//! transition probabilities, so they can check the exact solvers.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};
use crate::model::{LaneLabel, LaneState, QueueState};

/// Replications that exceed this many steps are reported as divergent.
pub const MAX_STEPS: u64 = 1_000_000;

/// A chain that can be sampled one transition at a time.
pub trait AbsorbingChain {
    type State: Clone;

    fn is_terminal(&self, state: &Self::State) -> bool;

    fn sample_next<R: Rng + ?Sized>(&self, state: &Self::State, rng: &mut R) -> Self::State;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
}

impl OracleEstimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (value - self.mean).abs() <= k * self.std_error + 1e-12
    }
}

/// Mean accumulated one-step cost until absorption from `start`.
pub fn mc_absorb_oracle<C: AbsorbingChain>(
    chain: &C,
    start: &C::State,
    cost: f64,
    reps: usize,
    seed: u64,
) -> Result<OracleEstimate> {
    if reps == 0 {
        return Err(domain("at least one replication is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for rep in 0..reps {
        let mut state = start.clone();
        let mut steps = 0u64;
        while !chain.is_terminal(&state) {
            if steps == MAX_STEPS {
                return Err(Error::Divergence { steps });
            }
            state = chain.sample_next(&state, &mut rng);
            steps += 1;
        }
        let x = steps as f64 * cost;
        let delta = x - mean;
        mean += delta / (rep + 1) as f64;
        m2 += delta * (x - mean);
    }
    let std_error = if reps > 1 { libm::sqrt(m2 / (reps - 1) as f64 / reps as f64) } else { 0.0 };
    Ok(OracleEstimate { mean, std_error, reps })
}

/// Draws the new content of an open lane.
fn draw_open_lane<R: Rng + ?Sized>(p: f64, fv: f64, rng: &mut R) -> LaneLabel {
    if !rng.random_bool(p) {
        LaneLabel::Empty
    } else if rng.random::<f64>() < fv {
        LaneLabel::Lower
    } else {
        LaneLabel::Higher
    }
}

/// Queue-based dynamics with a common arrival probability.
#[derive(Debug, Clone, Copy)]
pub struct QueueChainSampler {
    pub lanes: usize,
    pub p: f64,
    pub fv: f64,
}

impl AbsorbingChain for QueueChainSampler {
    type State = QueueState;

    fn is_terminal(&self, state: &QueueState) -> bool {
        state.is_terminal(self.lanes)
    }

    fn sample_next<R: Rng + ?Sized>(&self, state: &QueueState, rng: &mut R) -> QueueState {
        // The serviced higher-bidder's lane plus every empty lane is open.
        let open = state.empty + 1;
        let mut next = QueueState::new(state.lower, 0);
        for _ in 0..open {
            match draw_open_lane(self.p, self.fv, rng) {
                LaneLabel::Empty => next.empty += 1,
                LaneLabel::Lower => next.lower += 1,
                LaneLabel::Higher => {}
            }
        }
        next
    }
}

/// Lane-based dynamics: the moving lane is drawn uniformly among higher lanes.
#[derive(Debug, Clone)]
pub struct LaneChainSampler {
    pub probs: Vec<f64>,
    pub fv: f64,
}

impl AbsorbingChain for LaneChainSampler {
    type State = LaneState;

    fn is_terminal(&self, state: &LaneState) -> bool {
        state.is_terminal()
    }

    fn sample_next<R: Rng + ?Sized>(&self, state: &LaneState, rng: &mut R) -> LaneState {
        let higher: Vec<usize> =
            state.entries().iter().enumerate().filter(|(_, &l)| l == LaneLabel::Higher).map(|(j, _)| j).collect();
        let moving = higher[rng.random_range(0..higher.len())];
        let next = state
            .entries()
            .iter()
            .enumerate()
            .map(|(j, &label)| {
                if label == LaneLabel::Empty || j == moving {
                    draw_open_lane(self.probs[j], self.fv, rng)
                } else {
                    label
                }
            })
            .collect();
        LaneState::new(next)
    }
}
