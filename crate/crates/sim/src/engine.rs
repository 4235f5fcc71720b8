//! Simulation driver: advances the world, prices arrivals and collects records.
//!
//! Prices never feed back into the dynamics (service order only depends on
//! declared bids), so arrivals are queued with their snapshot and priced in
//! batches in parallel. Results are written back by user id, which keeps runs
//! deterministic regardless of thread count.

use intersection_core::pricing::{static_quote, Pricer, WaitModel};
use intersection_core::{IntersectionParams, PriceQuote, PricingSnapshot};
use rayon::prelude::*;

use crate::config::{BidPolicy, Mechanism, SimConfig, SweepProtocol};
use crate::error::SimError;
use crate::noise::LaneNoise;
use crate::stats::{bin_stats, misreport_grid, paired_bids, paired_grid, BinnedStats, Heatmap, UserRecord};
use crate::world::{Occupant, World};

const PRICING_BATCH: usize = 4096;

/// Longest replay before giving up on a user.
const MAX_REPLAY_PERIODS: u64 = 1_000_000;

/// Prices snapshots under one mechanism.
#[derive(Debug, Clone)]
pub enum Mechanic {
    Static(IntersectionParams),
    Queue(Pricer),
    /// One pricer per focal lane.
    Lane(Vec<Pricer>),
}

impl Mechanic {
    pub fn new(mechanism: Mechanism, params: &IntersectionParams) -> Result<Self, SimError> {
        Ok(match mechanism {
            Mechanism::Static => Mechanic::Static(params.clone()),
            Mechanism::Queue => Mechanic::Queue(Pricer::new(&WaitModel::queue_mean(params), params)?),
            Mechanism::Lane => Mechanic::Lane(
                (0..params.lanes)
                    .map(|j| Pricer::new(&WaitModel::lane_for(params, j), params))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    pub fn quote(&self, snap: &PricingSnapshot, true_value: f64) -> Result<PriceQuote, SimError> {
        let declared = snap.focal_bid();
        Ok(match self {
            Mechanic::Static(params) => static_quote(snap, declared, true_value, params)?,
            Mechanic::Queue(p) => p.quote(snap, declared, true_value)?,
            Mechanic::Lane(ps) => ps[snap.focal_lane()].quote(snap, declared, true_value)?,
        })
    }

    /// Payments for each of `bids` (ascending) declared against `snap`.
    pub fn payments(&self, snap: &PricingSnapshot, bids: &[f64]) -> Result<Vec<f64>, SimError> {
        Ok(match self {
            Mechanic::Static(params) => bids
                .iter()
                .map(|&b| static_quote(&snap.with_focal_bid(b), b, b, params).map(|q| q.payment))
                .collect::<Result<_, _>>()?,
            Mechanic::Queue(p) => p.payment_schedule(snap, bids)?,
            Mechanic::Lane(ps) => ps[snap.focal_lane()].payment_schedule(snap, bids)?,
        })
    }
}

struct Pending {
    user: usize,
    true_value: f64,
    snap: PricingSnapshot,
    /// World right after the arrival, kept for replays.
    world: Option<World>,
}

/// What the run records about each arrival, indexed by user id.
struct Ledger {
    quotes: Vec<Option<PriceQuote>>,
    /// `declared_bins` replayed costs per user when replaying.
    replayed: Vec<f64>,
}

/// Replay settings for the paired misreport protocol.
struct Replay<'a> {
    params: &'a IntersectionParams,
    policy: BidPolicy,
    noise: &'a LaneNoise,
    declared_bins: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Serviced users in service order.
    pub records: Vec<UserRecord>,
    pub stats: BinnedStats,
    pub arrivals: usize,
    /// Users still waiting when the run stopped.
    pub queued: usize,
    pub periods: u64,
}

pub fn run(config: &SimConfig) -> Result<RunOutput, SimError> {
    simulate(config, BidPolicy::Truthful)
}

/// Runs with the given bidding policy until `config.users` users are serviced.
pub fn simulate(config: &SimConfig, policy: BidPolicy) -> Result<RunOutput, SimError> {
    drive(config, policy, None).map(|(out, _)| out)
}

/// The simulation loop. With `replay_bins`, every arrival is also replayed
/// once per declared bin and the costs are returned in record order.
fn drive(config: &SimConfig, policy: BidPolicy, replay_bins: Option<usize>) -> Result<(RunOutput, Vec<f64>), SimError> {
    config.validate()?;
    let params = &config.params;
    let g = params.step_cost;
    let mechanic = Mechanic::new(config.mechanism, params)?;
    let noise = LaneNoise::new(config.seed);
    let replay = replay_bins.map(|declared_bins| Replay { params, policy, noise: &noise, declared_bins });
    let mut world = World::new(params.lanes);
    let mut ledger = Ledger { quotes: Vec::new(), replayed: Vec::new() };
    let mut served: Vec<(usize, Occupant, u64)> = Vec::with_capacity(config.users);
    let mut pending: Vec<Pending> = Vec::with_capacity(PRICING_BATCH);

    while served.len() < config.users {
        let now = world.time;
        let events = world.step(params, policy, &noise);
        if let Some((lane, occ)) = events.served {
            served.push((lane, occ, now));
        }
        for lane in events.arrivals {
            let occ = world.lanes[lane].expect("arrival lane is occupied");
            pending.push(Pending {
                user: occ.user,
                true_value: occ.true_value,
                snap: world.snapshot(lane)?,
                world: replay.as_ref().map(|_| world.clone()),
            });
        }
        if pending.len() >= PRICING_BATCH {
            price_batch(&mechanic, replay.as_ref(), &mut pending, &mut ledger)?;
        }
    }
    price_batch(&mechanic, replay.as_ref(), &mut pending, &mut ledger)?;

    let records: Vec<UserRecord> = served
        .into_iter()
        .map(|(lane, occ, service_step)| {
            let quote = ledger.quotes[occ.user].expect("every arrival is priced");
            let waited_steps = (service_step - occ.arrival_step) as f64;
            UserRecord {
                user: occ.user,
                lane,
                true_value: occ.true_value,
                declared: occ.declared,
                arrival_step: occ.arrival_step,
                service_step,
                experienced_wait: waited_steps * g,
                expected_wait: quote.wait,
                payment: quote.payment,
                generalized_cost: occ.true_value * waited_steps + quote.payment,
            }
        })
        .collect();
    let costs = match replay_bins {
        Some(k) => records.iter().flat_map(|r| ledger.replayed[r.user * k..(r.user + 1) * k].iter().copied()).collect(),
        None => Vec::new(),
    };
    let stats = bin_stats(&records, config.bins, (params.dist.lower(), params.dist.upper()), params.lanes);
    let out = RunOutput { records, stats, arrivals: world.arrivals(), queued: world.queued(), periods: world.time };
    Ok((out, costs))
}

/// Generalized cost of declaring each paired bid, from replays of the world
/// the user arrived in.
fn replay_costs(mechanic: &Mechanic, replay: &Replay, p: &Pending) -> Result<Vec<f64>, SimError> {
    let world = p.world.as_ref().expect("replays keep the world");
    let lane = p.snap.focal_lane();
    let arrival_step = world.lanes[lane].expect("focal lane is occupied").arrival_step;
    let range = (replay.params.dist.lower(), replay.params.dist.upper());
    let bids = paired_bids(p.true_value, replay.declared_bins, range);
    let payments = mechanic.payments(&p.snap, &bids)?;
    bids.iter()
        .zip(payments)
        .map(|(&bid, payment)| {
            let service = world
                .rollout(lane, bid, replay.params, replay.policy, replay.noise, MAX_REPLAY_PERIODS)
                .ok_or(SimError::Replay { user: p.user, periods: MAX_REPLAY_PERIODS })?;
            Ok(p.true_value * (service - arrival_step) as f64 + payment)
        })
        .collect()
}

fn price_batch(
    mechanic: &Mechanic,
    replay: Option<&Replay>,
    pending: &mut Vec<Pending>,
    ledger: &mut Ledger,
) -> Result<(), SimError> {
    let priced: Vec<(usize, PriceQuote, Vec<f64>)> = pending
        .par_iter()
        .map(|p| {
            let quote = mechanic.quote(&p.snap, p.true_value)?;
            let costs = match replay {
                Some(r) => replay_costs(mechanic, r, p)?,
                None => Vec::new(),
            };
            Ok((p.user, quote, costs))
        })
        .collect::<Result<_, SimError>>()?;
    for (user, quote, costs) in priced {
        if ledger.quotes.len() <= user {
            ledger.quotes.resize(user + 1, None);
        }
        ledger.quotes[user] = Some(quote);
        if let Some(r) = replay {
            let k = r.declared_bins;
            if ledger.replayed.len() < (user + 1) * k {
                ledger.replayed.resize((user + 1) * k, f64::NAN);
            }
            ledger.replayed[user * k..(user + 1) * k].copy_from_slice(&costs);
        }
    }
    pending.clear();
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    /// Grid over every lane.
    pub all: Heatmap,
    /// One grid per lane.
    pub lanes: Vec<Heatmap>,
    pub run: RunOutput,
}

/// Misreport experiment. Every user declares a bid drawn independently of
/// their true value, so the bid law the chains assume still holds; the grid
/// is then estimated with the configured protocol.
pub fn misreport_sweep(config: &SimConfig) -> Result<SweepOutput, SimError> {
    let spec = config.sweep.unwrap_or_default();
    let range = (config.params.dist.lower(), config.params.dist.upper());
    let (t, k) = (spec.true_bins, spec.declared_bins);
    let replay = (spec.protocol == SweepProtocol::Paired).then_some(k);
    let (run, costs) = drive(config, BidPolicy::IndependentUniform, replay)?;
    let grid = |lane: Option<usize>| {
        let keep = |r: &UserRecord| lane.map_or(true, |j| r.lane == j);
        let records: Vec<UserRecord> = run.records.iter().filter(|r| keep(r)).copied().collect();
        match spec.protocol {
            SweepProtocol::Binned => misreport_grid(&records, t, k, range),
            SweepProtocol::Paired => {
                let own: Vec<f64> = run
                    .records
                    .iter()
                    .zip(costs.chunks_exact(k))
                    .filter(|(r, _)| keep(r))
                    .flat_map(|(_, c)| c.iter().copied())
                    .collect();
                paired_grid(&records, &own, t, k, range)
            }
        }
    };
    let all = grid(None);
    let lanes = (0..config.params.lanes).map(|j| grid(Some(j))).collect();
    Ok(SweepOutput { all, lanes, run })
}
