//! One intersection, advanced one service period at a time.

use intersection_core::{IntersectionParams, PricingSnapshot, Result};

use crate::config::BidPolicy;
use crate::noise::LaneNoise;

/// User at the front of a lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupant {
    pub user: usize,
    pub true_value: f64,
    pub declared: f64,
    /// First period in which the user can be serviced.
    pub arrival_step: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepEvents {
    /// Lane and user serviced this period.
    pub served: Option<(usize, Occupant)>,
    /// Lanes that received a new user this period.
    pub arrivals: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub time: u64,
    pub lanes: Vec<Option<Occupant>>,
    next_user: usize,
}

impl World {
    pub fn new(lanes: usize) -> Self {
        Self { time: 0, lanes: vec![None; lanes], next_user: 0 }
    }

    /// Users that have arrived so far.
    pub fn arrivals(&self) -> usize {
        self.next_user
    }

    pub fn queued(&self) -> usize {
        self.lanes.iter().filter(|o| o.is_some()).count()
    }

    /// Lane of the highest declared bid; ties go to the lowest lane.
    pub fn next_to_serve(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (j, occ) in self.lanes.iter().enumerate() {
            if let Some(o) = occ {
                if best.map_or(true, |(_, b)| o.declared > b) {
                    best = Some((j, o.declared));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// One period: service the highest bidder, then draw arrivals on every
    /// empty lane.
    pub fn step(&mut self, params: &IntersectionParams, policy: BidPolicy, noise: &LaneNoise) -> StepEvents {
        let served = self.next_to_serve().map(|j| (j, self.lanes[j].take().expect("occupied lane")));
        let mut arrivals = Vec::new();
        for j in 0..self.lanes.len() {
            if self.lanes[j].is_some() {
                continue;
            }
            let draw = noise.draw(j, self.time);
            if draw.arrival >= params.arrival_probs[j] {
                continue;
            }
            let true_value = params.dist.quantile(draw.true_u);
            let declared = match policy {
                BidPolicy::Truthful => true_value,
                BidPolicy::IndependentUniform => params.dist.quantile(draw.declared_u),
            };
            self.lanes[j] = Some(Occupant { user: self.next_user, true_value, declared, arrival_step: self.time + 1 });
            self.next_user += 1;
            arrivals.push(j);
        }
        self.time += 1;
        StepEvents { served, arrivals }
    }

    /// Steps a copy of the world, with the user on `lane` declaring `declared`
    /// instead, until that user is serviced. Returns the service period, or
    /// `None` after `max_steps` periods.
    pub fn rollout(
        &self,
        lane: usize,
        declared: f64,
        params: &IntersectionParams,
        policy: BidPolicy,
        noise: &LaneNoise,
        max_steps: u64,
    ) -> Option<u64> {
        let mut world = self.clone();
        let user = {
            let occ = world.lanes[lane].as_mut().expect("rollout of an empty lane");
            occ.declared = declared;
            occ.user
        };
        for _ in 0..max_steps {
            let now = world.time;
            if let Some((_, occ)) = world.step(params, policy, noise).served {
                if occ.user == user {
                    return Some(now);
                }
            }
        }
        None
    }

    /// The pricing queue as seen by the user on `lane`.
    pub fn snapshot(&self, lane: usize) -> Result<PricingSnapshot> {
        let focal = self.lanes[lane].expect("snapshot of an empty lane");
        let others = self
            .lanes
            .iter()
            .enumerate()
            .filter(|&(j, o)| j != lane && o.is_some())
            .map(|(j, o)| (j, o.map_or(0.0, |o| o.declared)));
        PricingSnapshot::new(self.lanes.len(), lane, focal.declared, others)
    }
}
