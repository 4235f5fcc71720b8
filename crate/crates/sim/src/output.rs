//! CSV writers. Money is written in cents with two decimals and times in
//! seconds with four decimals.

use std::io::Write;

use intersection_core::PriceQuote;

use crate::error::SimError;
use crate::stats::{BinnedStats, Heatmap, UserRecord};

/// Bid in currency per step to cents.
pub fn cents(money: f64) -> String {
    format!("{:.2}", money * 100.0)
}

pub fn seconds(t: f64) -> String {
    format!("{t:.4}")
}

/// Per-step bid back to a rate per hour.
fn per_hour(bid: f64, step_seconds: f64) -> String {
    format!("{:.4}", bid * 3600.0 / step_seconds)
}

pub const QUOTE_HEADER: [&str; 9] = [
    "wait_s",
    "wait_min_bid_s",
    "busy_s",
    "before_s",
    "after_s",
    "mb_cents",
    "ma_cents",
    "payment_cents",
    "cost_cents",
];

pub fn write_quote<W: Write>(out: W, q: &PriceQuote) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(QUOTE_HEADER)?;
    w.write_record([
        seconds(q.wait),
        seconds(q.wait_min_bid),
        seconds(q.busy),
        seconds(q.before),
        seconds(q.after),
        cents(q.mb),
        cents(q.ma),
        cents(q.payment),
        cents(q.generalized_cost),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_users<W: Write>(out: W, records: &[UserRecord]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "user",
        "lane",
        "true_value_cents",
        "declared_cents",
        "arrival_step",
        "service_step",
        "experienced_wait_s",
        "expected_wait_s",
        "payment_cents",
        "generalized_cost_cents",
    ])?;
    for r in records {
        w.write_record([
            r.user.to_string(),
            r.lane.to_string(),
            format!("{:.4}", r.true_value * 100.0),
            format!("{:.4}", r.declared * 100.0),
            r.arrival_step.to_string(),
            r.service_step.to_string(),
            seconds(r.experienced_wait),
            seconds(r.expected_wait),
            format!("{:.4}", r.payment * 100.0),
            format!("{:.4}", r.generalized_cost * 100.0),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bins<W: Write>(out: W, stats: &BinnedStats, step_seconds: f64) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "lane",
        "bin_low_per_hour",
        "bin_high_per_hour",
        "count",
        "experienced_wait_s",
        "expected_wait_s",
        "payment_cents",
        "generalized_cost_cents",
    ])?;
    for row in &stats.rows {
        w.write_record([
            row.lane.map_or_else(|| "all".to_string(), |j| j.to_string()),
            per_hour(row.low, step_seconds),
            per_hour(row.high, step_seconds),
            row.count.to_string(),
            seconds(row.experienced_wait),
            seconds(row.expected_wait),
            format!("{:.4}", row.payment * 100.0),
            format!("{:.4}", row.generalized_cost * 100.0),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Relative costs are clipped to ±10% as displayed.
pub fn write_heatmap<W: Write>(out: W, map: &Heatmap, step_seconds: f64) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["true_bin_low", "declared_bin_low", "relative_cost_pct", "count"])?;
    for c in &map.cells {
        let rel = if c.relative_pct.is_nan() { f64::NAN } else { c.relative_pct.clamp(-10.0, 10.0) };
        w.write_record([
            per_hour(c.true_low, step_seconds),
            per_hour(c.declared_low, step_seconds),
            format!("{rel:.4}"),
            c.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuntimeRow {
    pub lanes: usize,
    pub mechanism: &'static str,
    pub mean_s: f64,
    pub ci95_s: f64,
}

pub fn write_runtime<W: Write>(out: W, rows: &[RuntimeRow]) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lanes", "mechanism", "mean_s", "ci95_s"])?;
    for r in rows {
        w.write_record([
            r.lanes.to_string(),
            r.mechanism.to_string(),
            format!("{:e}", r.mean_s),
            format!("{:e}", r.ci95_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}
