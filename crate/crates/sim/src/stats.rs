//! Aggregation of user records into value bins and misreport grids.

/// One serviced user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserRecord {
    pub user: usize,
    pub lane: usize,
    pub true_value: f64,
    pub declared: f64,
    pub arrival_step: u64,
    pub service_step: u64,
    /// Seconds between the first eligible period and service.
    pub experienced_wait: f64,
    /// Expected wait quoted at arrival, in seconds.
    pub expected_wait: f64,
    pub payment: f64,
    /// True value times the experienced wait in steps, plus the payment.
    pub generalized_cost: f64,
}

/// Means over the records of one value bin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BinRow {
    /// `None` aggregates every lane.
    pub lane: Option<usize>,
    pub bin: usize,
    pub low: f64,
    pub high: f64,
    pub count: usize,
    pub experienced_wait: f64,
    pub expected_wait: f64,
    pub payment: f64,
    pub generalized_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BinnedStats {
    pub bins: usize,
    pub range: (f64, f64),
    /// Rows for all lanes first, then per lane, each in bin order.
    pub rows: Vec<BinRow>,
}

impl BinnedStats {
    pub fn all_lanes(&self) -> impl Iterator<Item = &BinRow> {
        self.rows.iter().filter(|r| r.lane.is_none())
    }

    pub fn lane(&self, lane: usize) -> impl Iterator<Item = &BinRow> {
        self.rows.iter().filter(move |r| r.lane == Some(lane))
    }
}

/// Index of the uniform bin of `[lo, hi]` holding `x`; the upper bound
/// belongs to the last bin.
pub fn bin_index(x: f64, bins: usize, (lo, hi): (f64, f64)) -> usize {
    let t = ((x - lo) / (hi - lo) * bins as f64).floor();
    if t <= 0.0 {
        0
    } else {
        (t as usize).min(bins - 1)
    }
}

/// Bins records by true value over `range`, for all lanes and for each of
/// `lanes` lanes.
pub fn bin_stats(records: &[UserRecord], bins: usize, range: (f64, f64), lanes: usize) -> BinnedStats {
    assert!(bins >= 1, "at least one bin is required");
    let width = (range.1 - range.0) / bins as f64;
    let mut rows = Vec::with_capacity(bins * (lanes + 1));
    for lane in std::iter::once(None).chain((0..lanes).map(Some)) {
        for bin in 0..bins {
            rows.push(BinRow {
                lane,
                bin,
                low: range.0 + bin as f64 * width,
                high: range.0 + (bin + 1) as f64 * width,
                ..BinRow::default()
            });
        }
    }
    for r in records {
        let bin = bin_index(r.true_value, bins, range);
        for row in [bin, (r.lane + 1) * bins + bin] {
            let row = &mut rows[row];
            row.count += 1;
            row.experienced_wait += r.experienced_wait;
            row.expected_wait += r.expected_wait;
            row.payment += r.payment;
            row.generalized_cost += r.generalized_cost;
        }
    }
    for row in &mut rows {
        if row.count > 0 {
            let n = row.count as f64;
            row.experienced_wait /= n;
            row.expected_wait /= n;
            row.payment /= n;
            row.generalized_cost /= n;
        }
    }
    BinnedStats { bins, range, rows }
}

/// One cell of a misreport grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatCell {
    pub true_bin: usize,
    pub declared_bin: usize,
    pub true_low: f64,
    pub declared_low: f64,
    /// Relative generalized cost against the truthful cell of the row, in percent.
    pub relative_pct: f64,
    /// Records whose true and declared values fall in this cell.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub true_bins: usize,
    pub declared_bins: usize,
    /// Row-major by true bin.
    pub cells: Vec<HeatCell>,
}

impl Heatmap {
    pub fn cell(&self, true_bin: usize, declared_bin: usize) -> &HeatCell {
        &self.cells[true_bin * self.declared_bins + declared_bin]
    }

    /// Declared bin treated as truthful for a row: the one holding the row's midpoint.
    pub fn diagonal(&self, true_bin: usize) -> usize {
        diagonal_bin(true_bin, self.true_bins, self.declared_bins)
    }

    pub fn min_off_diagonal(&self) -> Option<&HeatCell> {
        self.cells
            .iter()
            .filter(|c| c.declared_bin != self.diagonal(c.true_bin))
            .min_by(|a, b| a.relative_pct.total_cmp(&b.relative_pct))
    }
}

fn diagonal_bin(true_bin: usize, true_bins: usize, declared_bins: usize) -> usize {
    let mid = (true_bin as f64 + 0.5) / true_bins as f64;
    bin_index(mid, declared_bins, (0.0, 1.0))
}

/// Declared bids a user with `true_value` is replayed at: one per declared
/// bin, each at the same relative position inside its bin as the true value
/// inside its own. The bin holding the true value gets the true value itself.
pub fn paired_bids(true_value: f64, declared_bins: usize, (lo, hi): (f64, f64)) -> Vec<f64> {
    let width = (hi - lo) / declared_bins as f64;
    let own = bin_index(true_value, declared_bins, (lo, hi));
    let offset = true_value - (lo + own as f64 * width);
    (0..declared_bins)
        .map(|k| if k == own { true_value } else { (lo + k as f64 * width + offset).clamp(lo, hi) })
        .collect()
}

/// Misreport grid as raw cell means: each record counts in the cell of its
/// true and declared values.
pub fn misreport_grid(records: &[UserRecord], true_bins: usize, declared_bins: usize, range: (f64, f64)) -> Heatmap {
    let mut sums = vec![0.0; true_bins * declared_bins];
    let mut counts = vec![0usize; true_bins * declared_bins];
    for r in records {
        let i = bin_index(r.true_value, true_bins, range) * declared_bins + bin_index(r.declared, declared_bins, range);
        sums[i] += r.generalized_cost;
        counts[i] += 1;
    }
    let means: Vec<f64> =
        sums.iter().zip(&counts).map(|(&s, &n)| if n > 0 { s / n as f64 } else { f64::NAN }).collect();
    assemble(true_bins, declared_bins, range, &means, &counts)
}

/// Misreport grid from replayed costs. `costs` holds `declared_bins` costs
/// per record, in record order, for the bids of [`paired_bids`]. Every cell
/// of a row averages over the same users, so its count is the row count.
pub fn paired_grid(
    records: &[UserRecord],
    costs: &[f64],
    true_bins: usize,
    declared_bins: usize,
    range: (f64, f64),
) -> Heatmap {
    assert_eq!(costs.len(), records.len() * declared_bins, "one cost per record and declared bin");
    let mut sums = vec![0.0; true_bins * declared_bins];
    let mut rows = vec![0usize; true_bins];
    for (r, c) in records.iter().zip(costs.chunks_exact(declared_bins)) {
        let t = bin_index(r.true_value, true_bins, range);
        rows[t] += 1;
        for (sum, cost) in sums[t * declared_bins..(t + 1) * declared_bins].iter_mut().zip(c) {
            *sum += cost;
        }
    }
    let counts: Vec<usize> = (0..true_bins * declared_bins).map(|i| rows[i / declared_bins]).collect();
    let means: Vec<f64> =
        sums.iter().zip(&counts).map(|(&s, &n)| if n > 0 { s / n as f64 } else { f64::NAN }).collect();
    assemble(true_bins, declared_bins, range, &means, &counts)
}

fn assemble(true_bins: usize, declared_bins: usize, range: (f64, f64), means: &[f64], counts: &[usize]) -> Heatmap {
    let width = range.1 - range.0;
    let mut cells = Vec::with_capacity(true_bins * declared_bins);
    for t in 0..true_bins {
        let truthful = means[t * declared_bins + diagonal_bin(t, true_bins, declared_bins)];
        for d in 0..declared_bins {
            let i = t * declared_bins + d;
            cells.push(HeatCell {
                true_bin: t,
                declared_bin: d,
                true_low: range.0 + width * t as f64 / true_bins as f64,
                declared_low: range.0 + width * d as f64 / declared_bins as f64,
                relative_pct: 100.0 * (means[i] - truthful) / truthful,
                count: counts[i],
            });
        }
    }
    Heatmap { true_bins, declared_bins, cells }
}
