//! Online incentive-compatible pricing for single-server intersection auctions.
//!
//! Users at the front of their lane declare a per-step delay cost and are
//! serviced one at a time in decreasing order of declared cost. This crate
//! computes a user's expected waiting time with one of two absorbing Markov
//! chains and charges the expected marginal delay cost the user imposes on
//! present and future users:
//!
//! * [`queue_chain`] tracks only the number of lower-bidding and empty lanes
//!   and assumes one arrival probability for every lane.
//! * [`lane_chain`] tracks every lane individually and supports lane-specific
//!   arrival probabilities, at the price of `3^(Q-1)` states.
//! * [`pricing`] turns either chain into a full [`PriceQuote`], and also
//!   provides the static VCG baseline that ignores future arrivals.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod lane_chain;
pub mod model;
pub mod numerics;
pub mod pricing;
pub mod queue_chain;

pub use error::{Error, Result};
pub use lane_chain::{LaneChain, LaneWaits};
pub use model::{
    bid_from_hourly_rate, classify_lane, classify_queue, map_lane_to_queue, BidDistribution, DistributionKind,
    IntersectionParams, LaneLabel, LaneState, PriceQuote, PricingSnapshot, QueueState,
};
pub use pricing::{Pricer, WaitModel};
pub use queue_chain::{QueueChain, QueueWaits};
