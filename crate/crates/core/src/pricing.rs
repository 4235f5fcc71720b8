//! Expected-marginal-cost payments and the static VCG baseline.
//!
//! A user bidding `v` is charged the delay cost they impose on the
//! lower-bidders already queued (`MB`) plus the expected delay cost imposed on
//! users that have not arrived yet (`MA`). Both follow from how the user's
//! expected wait would change had they bid less: lowering the hypothetical bid
//! from `v` to the minimal bid sweeps over the lower-bidders' bids one at a
//! time, and every crossing shifts wait onto that lower-bidder (`B`), while the
//! smooth decrease between crossings is wait shifted onto future arrivals
//! (`A`).
//!
//! Lower-bidders are ranked by `(bid, lane)`; when the hypothetical bid sits
//! on the `k`-th of them, the ones ranked before it count as lower and the
//! rest as higher. For distinct bids this is plain comparison, and for equal
//! bids it keeps the decomposition exact.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::lane_chain::{LaneChain, LaneWaits};
use crate::model::{IntersectionParams, LaneLabel, PriceQuote, PricingSnapshot, QueueState};
use crate::numerics::integrate_segment;
use crate::queue_chain::{QueueChain, QueueWaits};

/// Waiting-time model used by the dynamic mechanism.
#[derive(Debug, Clone, PartialEq)]
pub enum WaitModel {
    /// Queue-based chain with one arrival probability for every lane.
    QueueBased { p: f64 },
    /// Lane-based chain; one probability per non-focal lane, ascending by lane.
    LaneBased { lane_probs: Vec<f64> },
}

impl WaitModel {
    /// Queue-based model with the mean arrival probability of `params`.
    pub fn queue_mean(params: &IntersectionParams) -> Self {
        Self::QueueBased { p: params.mean_arrival_prob() }
    }

    /// Lane-based model for a user arriving on `focal`.
    pub fn lane_for(params: &IntersectionParams, focal: usize) -> Self {
        Self::LaneBased { lane_probs: params.lane_probs_for(focal) }
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Queue(QueueChain),
    Lane(LaneChain),
}

#[derive(Debug, Clone)]
enum Waits {
    Queue(QueueWaits),
    Lane(LaneWaits),
}

impl Waits {
    fn at(&self, labels: &[LaneLabel]) -> f64 {
        match self {
            Waits::Queue(w) => {
                let count = |x| labels.iter().filter(|&&l| l == x).count();
                w.get(QueueState::new(count(LaneLabel::Lower), count(LaneLabel::Empty))).unwrap_or(0.0)
            }
            Waits::Lane(w) => {
                let code = labels.iter().rev().fold(0, |acc, &l| acc * 3 + l as usize);
                w.by_code(code).unwrap_or(0.0)
            }
        }
    }
}

/// Solved waits of one quote, keyed by the bit pattern of `F(v)`.
struct Memo {
    entries: Vec<(u64, Waits)>,
}

/// Prepared mechanism for one intersection and waiting-time model.
///
/// A lane-based pricer is tied to the focal lane its probabilities were taken
/// for; snapshots priced with it must have that focal lane.
#[derive(Debug, Clone)]
pub struct Pricer {
    params: IntersectionParams,
    engine: Engine,
}

/// Lower-bidders of a snapshot sorted by `(bid, lane)`.
fn lower_bidders(snap: &PricingSnapshot, v: f64) -> Vec<(usize, f64)> {
    let mut lower: Vec<(usize, f64)> = snap.occupants().filter(|&(_, b)| b < v).collect();
    lower.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    lower
}

impl Pricer {
    pub fn new(model: &WaitModel, params: &IntersectionParams) -> Result<Self> {
        params.validate()?;
        let engine = match model {
            WaitModel::QueueBased { p } => Engine::Queue(QueueChain::new(params.lanes, *p, params.step_cost)?),
            WaitModel::LaneBased { lane_probs } => {
                if lane_probs.len() != params.lanes - 1 {
                    return Err(domain("lane-based model needs one probability per non-focal lane"));
                }
                Engine::Lane(LaneChain::new(lane_probs.clone(), params.step_cost)?)
            }
        };
        Ok(Self { params: params.clone(), engine })
    }

    pub fn params(&self) -> &IntersectionParams {
        &self.params
    }

    fn check(&self, snap: &PricingSnapshot, v: f64) -> Result<()> {
        if snap.lanes() != self.params.lanes {
            return Err(domain("snapshot lane count does not match the intersection"));
        }
        if !self.params.dist.contains(v) {
            return Err(domain("bid outside the support of the distribution"));
        }
        snap.check_bids(&self.params.dist)
    }

    fn solve(&self, fv: f64) -> Result<Waits> {
        Ok(match &self.engine {
            Engine::Queue(c) => Waits::Queue(c.solve(fv)?),
            Engine::Lane(c) => Waits::Lane(c.solve(fv)?),
        })
    }

    fn wait_memo(&self, memo: &mut Memo, v: f64, labels: &[LaneLabel]) -> Result<f64> {
        if !labels.contains(&LaneLabel::Higher) {
            return Ok(0.0);
        }
        let fv = self.params.dist.cdf_clamped(v);
        let key = fv.to_bits();
        if let Some((_, w)) = memo.entries.iter().find(|(k, _)| *k == key) {
            return Ok(w.at(labels));
        }
        let waits = self.solve(fv)?;
        let w = waits.at(labels);
        memo.entries.push((key, waits));
        Ok(w)
    }

    /// Labels of the non-focal lanes when the first `rank` lower-bidders count
    /// as lower and every other occupant as higher.
    fn ranked_labels(snap: &PricingSnapshot, lower: &[(usize, f64)], rank: usize) -> Vec<LaneLabel> {
        snap.other_lanes()
            .map(|j| match snap.bid(j) {
                None => LaneLabel::Empty,
                Some(_) if lower[..rank].iter().any(|&(l, _)| l == j) => LaneLabel::Lower,
                Some(_) => LaneLabel::Higher,
            })
            .collect()
    }

    /// Expected wait of the focal user at hypothetical bid `v`, optionally
    /// forcing one occupied lane to `Lower` or `Higher`.
    pub fn wait_at(&self, snap: &PricingSnapshot, v: f64, force: Option<(usize, LaneLabel)>) -> Result<f64> {
        self.check(snap, v)?;
        let mut labels: Vec<LaneLabel> = snap.other_lanes().map(|j| crate::model::label_of(snap.bid(j), v)).collect();
        if let Some((lane, label)) = force {
            if label == LaneLabel::Empty {
                return Err(domain("an override must be lower or higher"));
            }
            if lane == snap.focal_lane() || snap.bid(lane).is_none() {
                return Err(domain("an override must name an occupied non-focal lane"));
            }
            let pos = snap.other_lanes().position(|j| j == lane).unwrap_or(0);
            labels[pos] = label;
        }
        let mut memo = Memo { entries: Vec::new() };
        self.wait_memo(&mut memo, v, &labels)
    }

    /// `(W(v), W(v̲), W(v̲) - W(v))`.
    pub fn busy_period(&self, snap: &PricingSnapshot, v: f64) -> Result<(f64, f64, f64)> {
        self.check(snap, v)?;
        let mut memo = Memo { entries: Vec::new() };
        self.busy_with(&mut memo, snap, v)
    }

    fn busy_with(&self, memo: &mut Memo, snap: &PricingSnapshot, v: f64) -> Result<(f64, f64, f64)> {
        let lower = lower_bidders(snap, v);
        let wait = self.wait_memo(memo, v, &Self::ranked_labels(snap, &lower, lower.len()))?;
        let v_lb = self.params.dist.lower();
        let wait_min = self.wait_memo(memo, v_lb, &Self::ranked_labels(snap, &lower, 0))?;
        Ok((wait, wait_min, wait_min - wait))
    }

    /// `(B, MB)`: wait shifted onto queued lower-bidders and its cost.
    pub fn before_component(&self, snap: &PricingSnapshot, v: f64) -> Result<(f64, f64)> {
        self.check(snap, v)?;
        let mut memo = Memo { entries: Vec::new() };
        self.before_with(&mut memo, snap, v)
    }

    fn before_with(&self, memo: &mut Memo, snap: &PricingSnapshot, v: f64) -> Result<(f64, f64)> {
        let lower = lower_bidders(snap, v);
        let g = self.params.step_cost;
        let (mut b, mut mb) = (0.0, 0.0);
        for (k, &(_, bid)) in lower.iter().enumerate() {
            // At the k-th lower bid: that lane is lower just above it and higher just below it.
            let above = self.wait_memo(memo, bid, &Self::ranked_labels(snap, &lower, k + 1))?;
            let below = self.wait_memo(memo, bid, &Self::ranked_labels(snap, &lower, k))?;
            b += below - above;
            mb += bid * (below - above) / g;
        }
        Ok((b, mb))
    }

    /// `(A, MA)`: wait shifted onto future arrivals and its expected cost.
    pub fn after_component(&self, snap: &PricingSnapshot, v: f64) -> Result<(f64, f64)> {
        self.check(snap, v)?;
        let mut memo = Memo { entries: Vec::new() };
        let (_, _, busy) = self.busy_with(&mut memo, snap, v)?;
        let (b, _) = self.before_with(&mut memo, snap, v)?;
        let (_, ma) = self.segments_with(&mut memo, snap, v)?;
        Ok((busy - b, ma))
    }

    /// Sum over bid segments of the wait drop across the segment and of the
    /// cost integral `∫ -W'(x) x dx`, by parts.
    fn segments_with(&self, memo: &mut Memo, snap: &PricingSnapshot, v: f64) -> Result<(f64, f64)> {
        let lower = lower_bidders(snap, v);
        let v_lb = self.params.dist.lower();
        let (mut drop, mut ma) = (0.0, 0.0);
        for k in 0..=lower.len() {
            let a = if k == 0 { v_lb } else { lower[k - 1].1 };
            let b = if k == lower.len() { v } else { lower[k].1 };
            let (d, m) = self.piece(memo, &Self::ranked_labels(snap, &lower, k), a, b)?;
            drop += d;
            ma += m;
        }
        Ok((drop, ma))
    }

    /// Wait drop and cost over `[a, b]` with the classification held fixed.
    fn piece(&self, memo: &mut Memo, labels: &[LaneLabel], a: f64, b: f64) -> Result<(f64, f64)> {
        if b <= a {
            return Ok((0.0, 0.0));
        }
        let wa = self.wait_memo(memo, a, labels)?;
        let wb = self.wait_memo(memo, b, labels)?;
        let integral = integrate_segment(|x| self.wait_memo(memo, x, labels), a, b)?;
        Ok((wa - wb, (wa * a - wb * b + integral) / self.params.step_cost))
    }

    /// Payments for declaring each of `bids` (ascending) against one
    /// snapshot, computed in a single sweep over the bid range.
    pub fn payment_schedule(&self, snap: &PricingSnapshot, bids: &[f64]) -> Result<Vec<f64>> {
        self.check(snap, self.params.dist.lower())?;
        if bids.iter().any(|&b| !self.params.dist.contains(b)) {
            return Err(domain("bid outside the support of the distribution"));
        }
        if bids.windows(2).any(|w| w[1] < w[0]) {
            return Err(domain("bids must be sorted in ascending order"));
        }
        let occupants = lower_bidders(snap, f64::INFINITY);
        let g = self.params.step_cost;
        let mut memo = Memo { entries: Vec::new() };
        let (mut mb, mut ma) = (0.0, 0.0);
        let mut crossed = 0;
        let mut x = self.params.dist.lower();
        let mut out = Vec::with_capacity(bids.len());
        for &d in bids {
            while crossed < occupants.len() && occupants[crossed].1 < d {
                let c = occupants[crossed].1;
                ma += self.piece(&mut memo, &Self::ranked_labels(snap, &occupants, crossed), x, c)?.1;
                let above = self.wait_memo(&mut memo, c, &Self::ranked_labels(snap, &occupants, crossed + 1))?;
                let below = self.wait_memo(&mut memo, c, &Self::ranked_labels(snap, &occupants, crossed))?;
                mb += c * (below - above) / g;
                x = x.max(c);
                crossed += 1;
            }
            ma += self.piece(&mut memo, &Self::ranked_labels(snap, &occupants, crossed), x, d)?.1;
            x = x.max(d);
            out.push(mb + ma);
        }
        Ok(out)
    }

    /// Full mechanism output for a declared bid; `v_true` only enters the
    /// generalized cost.
    pub fn quote(&self, snap: &PricingSnapshot, v_declared: f64, v_true: f64) -> Result<PriceQuote> {
        self.check(snap, v_declared)?;
        check_true_value(v_true)?;
        let mut memo = Memo { entries: Vec::new() };
        let (wait, wait_min_bid, busy) = self.busy_with(&mut memo, snap, v_declared)?;
        let (before, mb) = self.before_with(&mut memo, snap, v_declared)?;
        let (_, ma) = self.segments_with(&mut memo, snap, v_declared)?;
        let payment = mb + ma;
        Ok(PriceQuote {
            wait,
            wait_min_bid,
            busy,
            before,
            after: busy - before,
            mb,
            ma,
            payment,
            generalized_cost: v_true * wait / self.params.step_cost + payment,
        })
    }

    /// `A` computed directly as the sum of within-segment wait drops.
    pub fn after_from_segments(&self, snap: &PricingSnapshot, v: f64) -> Result<f64> {
        self.check(snap, v)?;
        let mut memo = Memo { entries: Vec::new() };
        Ok(self.segments_with(&mut memo, snap, v)?.0)
    }
}

fn check_true_value(v_true: f64) -> Result<()> {
    if v_true.is_finite() && v_true >= 0.0 {
        Ok(())
    } else {
        Err(domain("true value must be finite and non-negative"))
    }
}

/// Static VCG baseline: the wait is the current rank and each lower-bidder is
/// charged once for the single service it is delayed by.
pub fn static_quote(
    snap: &PricingSnapshot,
    v_declared: f64,
    v_true: f64,
    params: &IntersectionParams,
) -> Result<PriceQuote> {
    params.validate()?;
    if snap.lanes() != params.lanes {
        return Err(domain("snapshot lane count does not match the intersection"));
    }
    if !v_declared.is_finite() {
        return Err(domain("bids must be finite"));
    }
    check_true_value(v_true)?;
    let g = params.step_cost;
    let higher = snap.occupants().filter(|&(_, b)| b >= v_declared).count();
    let lower: Vec<f64> = snap.occupants().filter(|&(_, b)| b < v_declared).map(|(_, b)| b).collect();
    let wait = higher as f64 * g;
    let busy = lower.len() as f64 * g;
    let payment = lower.iter().fold(0.0, |acc, b| acc + b);
    Ok(PriceQuote {
        wait,
        wait_min_bid: wait + busy,
        busy,
        before: busy,
        after: 0.0,
        mb: payment,
        ma: 0.0,
        payment,
        generalized_cost: v_true * wait / g + payment,
    })
}

pub fn wait_at(
    model: &WaitModel,
    snap: &PricingSnapshot,
    v: f64,
    params: &IntersectionParams,
    force: Option<(usize, LaneLabel)>,
) -> Result<f64> {
    Pricer::new(model, params)?.wait_at(snap, v, force)
}

pub fn busy_period(
    model: &WaitModel,
    snap: &PricingSnapshot,
    v: f64,
    params: &IntersectionParams,
) -> Result<(f64, f64, f64)> {
    Pricer::new(model, params)?.busy_period(snap, v)
}

pub fn before_component(
    model: &WaitModel,
    snap: &PricingSnapshot,
    v: f64,
    params: &IntersectionParams,
) -> Result<(f64, f64)> {
    Pricer::new(model, params)?.before_component(snap, v)
}

pub fn after_component(
    model: &WaitModel,
    snap: &PricingSnapshot,
    v: f64,
    params: &IntersectionParams,
) -> Result<(f64, f64)> {
    Pricer::new(model, params)?.after_component(snap, v)
}

pub fn quote(
    model: &WaitModel,
    snap: &PricingSnapshot,
    v_declared: f64,
    v_true: f64,
    params: &IntersectionParams,
) -> Result<PriceQuote> {
    Pricer::new(model, params)?.quote(snap, v_declared, v_true)
}
