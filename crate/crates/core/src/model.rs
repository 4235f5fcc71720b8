//! Domain types: the bid law, intersection parameters, chain states and the
//! concrete pricing snapshot a user sees when reaching the front of a lane.
//!
//! Bids are money per step (one step is one service of `step_cost` seconds),
//! expressed in the currency of the hourly rates they come from. Waiting times
//! are seconds.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{domain, Result};

const SECONDS_PER_HOUR: f64 = 3600.0;

/// Family of the value-of-time law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistributionKind {
    #[default]
    Uniform,
}

/// Law of the per-step delay cost users declare.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidDistribution {
    v_lb: f64,
    v_ub: f64,
    kind: DistributionKind,
}

impl BidDistribution {
    pub fn uniform(v_lb: f64, v_ub: f64) -> Result<Self> {
        if !(v_lb.is_finite() && v_ub.is_finite()) || v_lb <= 0.0 || v_lb >= v_ub {
            return Err(domain("bid support must satisfy 0 < v_lb < v_ub"));
        }
        Ok(Self { v_lb, v_ub, kind: DistributionKind::Uniform })
    }

    /// Uniform law given as hourly rates, converted to per-step bids.
    pub fn uniform_hourly(low_per_hour: f64, high_per_hour: f64, step_seconds: f64) -> Result<Self> {
        Self::uniform(
            bid_from_hourly_rate(low_per_hour, step_seconds)?,
            bid_from_hourly_rate(high_per_hour, step_seconds)?,
        )
    }

    pub fn lower(&self) -> f64 {
        self.v_lb
    }

    pub fn upper(&self) -> f64 {
        self.v_ub
    }

    pub fn kind(&self) -> DistributionKind {
        self.kind
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.v_lb && v <= self.v_ub
    }

    /// Probability that a user declares at most `v`.
    pub fn cdf(&self, v: f64) -> Result<f64> {
        if !self.contains(v) {
            return Err(domain("bid outside the support of the distribution"));
        }
        Ok(self.cdf_clamped(v))
    }

    /// CDF clamped to `[0, 1]` outside the support.
    pub(crate) fn cdf_clamped(&self, v: f64) -> f64 {
        match self.kind {
            DistributionKind::Uniform => ((v - self.v_lb) / (self.v_ub - self.v_lb)).clamp(0.0, 1.0),
        }
    }

    /// Inverse CDF; `u` is clamped to `[0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self.kind {
            DistributionKind::Uniform => self.v_lb + u.clamp(0.0, 1.0) * (self.v_ub - self.v_lb),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random())
    }
}

/// Converts an hourly value of time into a bid for one step of `step_seconds`.
pub fn bid_from_hourly_rate(rate: f64, step_seconds: f64) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) || !(step_seconds > 0.0 && step_seconds.is_finite()) {
        return Err(domain("hourly rate and step duration must be positive"));
    }
    Ok(rate * step_seconds / SECONDS_PER_HOUR)
}

/// Static description of the intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct IntersectionParams {
    pub lanes: usize,
    /// Service duration charged per chain transition, in seconds.
    pub step_cost: f64,
    /// Arrival probability per period, one entry per lane.
    pub arrival_probs: Vec<f64>,
    pub dist: BidDistribution,
}

impl IntersectionParams {
    pub fn new(lanes: usize, step_cost: f64, arrival_probs: Vec<f64>, dist: BidDistribution) -> Result<Self> {
        let params = Self { lanes, step_cost, arrival_probs, dist };
        params.validate()?;
        Ok(params)
    }

    /// Same arrival probability `p` on every lane.
    pub fn uniform(lanes: usize, step_cost: f64, p: f64, dist: BidDistribution) -> Result<Self> {
        Self::new(lanes, step_cost, alloc::vec![p; lanes], dist)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lanes < 2 {
            return Err(domain("an intersection needs at least two lanes"));
        }
        if !(self.step_cost > 0.0 && self.step_cost.is_finite()) {
            return Err(domain("step cost must be positive"));
        }
        if self.arrival_probs.len() != self.lanes {
            return Err(domain("one arrival probability per lane is required"));
        }
        if self.arrival_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(domain("arrival probabilities must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn mean_arrival_prob(&self) -> f64 {
        self.arrival_probs.iter().sum::<f64>() / self.lanes as f64
    }

    /// Arrival probabilities of the lanes other than `focal`, in canonical order.
    pub fn lane_probs_for(&self, focal: usize) -> Vec<f64> {
        self.arrival_probs.iter().enumerate().filter(|&(j, _)| j != focal).map(|(_, &p)| p).collect()
    }

    /// Number of whole steps in `seconds`.
    pub fn steps(&self, seconds: f64) -> f64 {
        seconds / self.step_cost
    }
}

/// Queue-based state: lanes holding lower-bidders and empty lanes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueueState {
    pub lower: usize,
    pub empty: usize,
}

impl QueueState {
    pub const fn new(lower: usize, empty: usize) -> Self {
        Self { lower, empty }
    }

    pub fn is_valid(&self, lanes: usize) -> bool {
        lanes >= 2 && self.lower + self.empty < lanes
    }

    /// Lanes holding higher-bidders; every other lane holds a user.
    pub fn higher(&self, lanes: usize) -> usize {
        lanes - 1 - self.lower - self.empty
    }

    pub fn is_terminal(&self, lanes: usize) -> bool {
        self.lower + self.empty == lanes - 1
    }
}

impl fmt::Display for QueueState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.lower, self.empty)
    }
}

/// Label of one lane relative to a reference bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LaneLabel {
    Empty = 0,
    Lower = 1,
    Higher = 2,
}

impl LaneLabel {
    pub const ALL: [LaneLabel; 3] = [LaneLabel::Empty, LaneLabel::Lower, LaneLabel::Higher];

    fn from_digit(d: usize) -> Self {
        match d {
            0 => LaneLabel::Empty,
            1 => LaneLabel::Lower,
            _ => LaneLabel::Higher,
        }
    }

    fn symbol(self) -> char {
        match self {
            LaneLabel::Empty => 'E',
            LaneLabel::Lower => 'L',
            LaneLabel::Higher => 'H',
        }
    }
}

/// Lane-based state: one label per non-focal lane, in ascending lane order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LaneState(Vec<LaneLabel>);

impl LaneState {
    pub fn new(entries: Vec<LaneLabel>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[LaneLabel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_terminal(&self) -> bool {
        !self.0.contains(&LaneLabel::Higher)
    }

    /// Base-3 code with the first lane as the least significant digit.
    pub fn code(&self) -> usize {
        self.0.iter().rev().fold(0, |acc, &l| acc * 3 + l as usize)
    }

    pub fn from_code(mut code: usize, len: usize) -> Self {
        let mut entries = Vec::with_capacity(len);
        for _ in 0..len {
            entries.push(LaneLabel::from_digit(code % 3));
            code /= 3;
        }
        Self(entries)
    }
}

impl fmt::Display for LaneState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", l.symbol())?;
        }
        f.write_str(")")
    }
}

/// The pricing queue as seen by a focal user: declared bids of the users at
/// the front of every other lane.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingSnapshot {
    focal_lane: usize,
    focal_bid: f64,
    /// Indexed by lane; the focal slot is always `None`.
    bids: Vec<Option<f64>>,
}

impl PricingSnapshot {
    pub fn new<I>(lanes: usize, focal_lane: usize, focal_bid: f64, occupants: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        if lanes < 2 {
            return Err(domain("an intersection needs at least two lanes"));
        }
        if focal_lane >= lanes {
            return Err(domain("focal lane out of range"));
        }
        let mut bids = alloc::vec![None; lanes];
        for (lane, bid) in occupants {
            if lane >= lanes || lane == focal_lane {
                return Err(domain("occupant lane must be a non-focal lane of the intersection"));
            }
            if bids[lane].is_some() {
                return Err(domain("a lane holds at most one user at its front"));
            }
            if !bid.is_finite() {
                return Err(domain("bids must be finite"));
            }
            bids[lane] = Some(bid);
        }
        Ok(Self { focal_lane, focal_bid, bids })
    }

    /// Checks that every bid lies in the support of `dist`.
    pub fn check_bids(&self, dist: &BidDistribution) -> Result<()> {
        let all_in = dist.contains(self.focal_bid) && self.occupants().all(|(_, b)| dist.contains(b));
        if all_in {
            Ok(())
        } else {
            Err(domain("snapshot bid outside the support of the distribution"))
        }
    }

    pub fn lanes(&self) -> usize {
        self.bids.len()
    }

    pub fn focal_lane(&self) -> usize {
        self.focal_lane
    }

    pub fn focal_bid(&self) -> f64 {
        self.focal_bid
    }

    pub fn with_focal_bid(&self, bid: f64) -> Self {
        Self { focal_bid: bid, ..self.clone() }
    }

    pub fn bid(&self, lane: usize) -> Option<f64> {
        self.bids.get(lane).copied().flatten()
    }

    /// Occupied non-focal lanes with their bids, ascending by lane.
    pub fn occupants(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.bids.iter().enumerate().filter_map(|(j, b)| b.map(|b| (j, b)))
    }

    pub fn occupant_count(&self) -> usize {
        self.bids.iter().filter(|b| b.is_some()).count()
    }

    /// Non-focal lanes in canonical order.
    pub fn other_lanes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.bids.len()).filter(move |&j| j != self.focal_lane)
    }
}

/// Label of an occupant bidding `bid` relative to a reference bid `v`.
/// Ties count as higher.
#[inline]
pub(crate) fn label_of(bid: Option<f64>, v: f64) -> LaneLabel {
    match bid {
        None => LaneLabel::Empty,
        Some(b) if b < v => LaneLabel::Lower,
        Some(_) => LaneLabel::Higher,
    }
}

pub fn classify_queue(snap: &PricingSnapshot, v: f64) -> QueueState {
    let lanes = snap.lanes();
    let occupied = snap.occupant_count();
    let lower = snap.occupants().filter(|&(_, b)| b < v).count();
    QueueState::new(lower, lanes - 1 - occupied)
}

pub fn classify_lane(snap: &PricingSnapshot, v: f64) -> LaneState {
    LaneState(snap.other_lanes().map(|j| label_of(snap.bid(j), v)).collect())
}

pub fn map_lane_to_queue(z: &LaneState) -> QueueState {
    let lower = z.0.iter().filter(|&&l| l == LaneLabel::Lower).count();
    let empty = z.0.iter().filter(|&&l| l == LaneLabel::Empty).count();
    QueueState::new(lower, empty)
}

/// Full output of the payment mechanism for one declared bid.
///
/// Times are seconds; money is in the currency of the bids.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PriceQuote {
    /// Expected wait at the declared bid.
    pub wait: f64,
    /// Expected wait had the user declared the minimal bid.
    pub wait_min_bid: f64,
    /// Remaining busy period, `wait_min_bid - wait`.
    pub busy: f64,
    /// Part of the busy period borne by users already queued.
    pub before: f64,
    /// Part of the busy period borne by expected future arrivals.
    pub after: f64,
    pub mb: f64,
    pub ma: f64,
    pub payment: f64,
    pub generalized_cost: f64,
}
