//! Queue-based chain: the state only counts lower-bidding and empty lanes,
//! and every lane shares one arrival probability.
//!
//! The lower-bidder count never decreases, so the expected waits are solved
//! level by level, from `lower = Q - 1` down to the level of interest. Each
//! level is a small system over the empty-lane count.

use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::model::{IntersectionParams, QueueState};
use crate::numerics::{binomial, ipow, solve_in_place, DenseMatrix, PIVOT_THRESHOLD};

/// All `(lower, empty)` pairs with `lower + empty <= Q - 1`.
pub fn queue_states(lanes: usize) -> Result<Vec<QueueState>> {
    if lanes < 2 {
        return Err(domain("an intersection needs at least two lanes"));
    }
    Ok((0..lanes).flat_map(|lower| (0..lanes - lower).map(move |empty| QueueState::new(lower, empty))).collect())
}

/// One-period transition probability between queue states.
///
/// The serviced higher-bidder's lane and the `empty` lanes are open; each
/// becomes empty with probability `1 - p`, receives a lower-bidder with
/// probability `p F(v)` and a higher-bidder with probability `p (1 - F(v))`.
pub fn queue_transition_prob(lanes: usize, from: QueueState, to: QueueState, p: f64, fv: f64) -> Result<f64> {
    check_prob(p, "arrival probability")?;
    check_prob(fv, "bid CDF value")?;
    if !from.is_valid(lanes) || !to.is_valid(lanes) {
        return Err(domain("state does not belong to the chain"));
    }
    if from.is_terminal(lanes) {
        return Err(domain("terminal states have no outgoing transitions"));
    }
    let open = from.empty + 1;
    if to.lower < from.lower || to.empty > open || to.lower - from.lower > open - to.empty {
        return Ok(0.0);
    }
    let new_lower = to.lower - from.lower;
    let new_higher = open - to.empty - new_lower;
    Ok(binomial(open, to.empty)
        * ipow(1.0 - p, to.empty)
        * binomial(open - to.empty, new_lower)
        * ipow(p * fv, new_lower)
        * ipow(p * (1.0 - fv), new_higher))
}

fn check_prob(x: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(domain(alloc::format!("{what} must lie in [0, 1]")))
    }
}

/// Expected waits for every state at levels `lower >= min_lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueWaits {
    lanes: usize,
    min_lower: usize,
    /// Indexed by `lower * lanes + empty`.
    values: Vec<f64>,
}

impl QueueWaits {
    pub fn min_lower(&self) -> usize {
        self.min_lower
    }

    /// Expected wait from `state`; `None` below the solved levels.
    pub fn get(&self, state: QueueState) -> Option<f64> {
        if !state.is_valid(self.lanes) || state.lower < self.min_lower {
            return None;
        }
        Some(self.values[state.lower * self.lanes + state.empty])
    }
}

/// Prepared solver for one intersection size and arrival probability.
#[derive(Debug, Clone)]
pub struct QueueChain {
    lanes: usize,
    p: f64,
    step_cost: f64,
    /// `binom[n * (lanes + 1) + k]` for `n, k <= lanes`.
    binom: Vec<f64>,
}

impl QueueChain {
    pub fn new(lanes: usize, p: f64, step_cost: f64) -> Result<Self> {
        if lanes < 2 {
            return Err(domain("an intersection needs at least two lanes"));
        }
        check_prob(p, "arrival probability")?;
        if !(step_cost > 0.0 && step_cost.is_finite()) {
            return Err(domain("step cost must be positive"));
        }
        let w = lanes + 1;
        let mut binom = alloc::vec![0.0; w * w];
        for n in 0..w {
            for k in 0..=n {
                binom[n * w + k] = binomial(n, k);
            }
        }
        Ok(Self { lanes, p, step_cost, binom })
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    pub fn arrival_prob(&self) -> f64 {
        self.p
    }

    /// Solves every level; see [`QueueChain::solve_from`].
    pub fn solve(&self, fv: f64) -> Result<QueueWaits> {
        self.solve_from(fv, 0)
    }

    /// Expected waits at bid CDF value `fv`, for every state whose
    /// lower-bidder count is at least `min_lower`.
    pub fn solve_from(&self, fv: f64, min_lower: usize) -> Result<QueueWaits> {
        check_prob(fv, "bid CDF value")?;
        let q = self.lanes;
        let min_lower = min_lower.min(q - 1);
        let w = q + 1;
        let p = self.p;
        let pow_empty: Vec<f64> = (0..=q).map(|k| ipow(1.0 - p, k)).collect();
        let pow_lower: Vec<f64> = (0..=q).map(|k| ipow(p * fv, k)).collect();
        let pow_higher: Vec<f64> = (0..=q).map(|k| ipow(p * (1.0 - fv), k)).collect();

        let mut values = alloc::vec![0.0; q * q];
        let mut a = DenseMatrix::zeros(0);
        let mut rhs = Vec::with_capacity(q);

        for level in (min_lower..q).rev() {
            // States (level, e) with e < q - 1 - level are unknown; e = q - 1 - level is terminal.
            let m = q - 1 - level;
            if m == 0 {
                continue;
            }
            a.reset(m);
            rhs.clear();
            for e in 0..m {
                let open = e + 1;
                let mut b = self.step_cost;
                for to_empty in 0..=open {
                    let base = self.binom[open * w + to_empty] * pow_empty[to_empty];
                    let rest = open - to_empty;
                    for new_lower in 0..=rest {
                        let prob = base
                            * self.binom[rest * w + new_lower]
                            * pow_lower[new_lower]
                            * pow_higher[rest - new_lower];
                        if prob == 0.0 {
                            continue;
                        }
                        let target = QueueState::new(level + new_lower, to_empty);
                        if target.is_terminal(q) {
                            continue;
                        }
                        if new_lower == 0 {
                            a[(e, to_empty)] -= prob;
                        } else {
                            b += prob * values[target.lower * q + target.empty];
                        }
                    }
                }
                a[(e, e)] += 1.0;
                if a[(e, e)] < PIVOT_THRESHOLD {
                    return Err(Error::Singular { pivot: a[(e, e)], threshold: PIVOT_THRESHOLD });
                }
                rhs.push(b);
            }
            solve_in_place(&mut a, &mut rhs)?;
            for (e, &x) in rhs.iter().enumerate() {
                values[level * q + e] = x;
            }
        }
        Ok(QueueWaits { lanes: q, min_lower, values })
    }

    /// Expected wait from a single state.
    pub fn wait(&self, fv: f64, state: QueueState) -> Result<f64> {
        if !state.is_valid(self.lanes) {
            return Err(domain("state does not belong to the chain"));
        }
        if state.is_terminal(self.lanes) {
            return Ok(0.0);
        }
        let waits = self.solve_from(fv, state.lower)?;
        Ok(waits.get(state).unwrap_or(0.0))
    }
}

/// Expected wait of a user bidding `v` from state `q`, with arrival probability `p`.
pub fn queue_wait(v: f64, q: QueueState, params: &IntersectionParams, p: f64) -> Result<f64> {
    let fv = params.dist.cdf(v)?;
    QueueChain::new(params.lanes, p, params.step_cost)?.wait(fv, q)
}
