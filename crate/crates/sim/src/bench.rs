//! Wall-clock cost of pricing one user.

use std::time::Instant;

use intersection_core::{BidDistribution, IntersectionParams, PricingSnapshot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Mechanism;
use crate::engine::Mechanic;
use crate::error::SimError;
use crate::output::RuntimeRow;

/// Random snapshot: every non-focal lane occupied with probability 1/2.
pub fn random_snapshot<R: Rng + ?Sized>(lanes: usize, dist: &BidDistribution, rng: &mut R) -> PricingSnapshot {
    let focal = rng.random_range(0..lanes);
    let bid = dist.sample(rng);
    let mut occupants = Vec::new();
    for j in (0..lanes).filter(|&j| j != focal) {
        if rng.random_bool(0.5) {
            occupants.push((j, dist.sample(rng)));
        }
    }
    PricingSnapshot::new(lanes, focal, bid, occupants).expect("valid random snapshot")
}

/// Mean and 95% half-width of the time to price `snapshots` random users.
pub fn time_mechanism(
    mechanism: Mechanism,
    lanes: usize,
    p: f64,
    snapshots: usize,
    seed: u64,
) -> Result<RuntimeRow, SimError> {
    let dist = BidDistribution::uniform_hourly(5.0, 10.0, 1.0)?;
    let params = IntersectionParams::uniform(lanes, 1.0, p, dist)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ lanes as u64);
    let snaps: Vec<PricingSnapshot> = (0..snapshots).map(|_| random_snapshot(lanes, &dist, &mut rng)).collect();
    let mut times = Vec::with_capacity(snapshots);
    for snap in &snaps {
        let start = Instant::now();
        // Preparing the chain is part of pricing a user.
        let mechanic = Mechanic::new(mechanism, &params)?;
        std::hint::black_box(mechanic.quote(snap, snap.focal_bid())?);
        times.push(start.elapsed().as_secs_f64());
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = if times.len() > 1 { times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    Ok(RuntimeRow { lanes, mechanism: mechanism.name(), mean_s: mean, ci95_s: 1.96 * (var / n).sqrt() })
}
