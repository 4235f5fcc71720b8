//! Shared numeric kernels.

pub mod linalg;
pub mod oracle;
pub mod quad;

pub use linalg::{solve_dense, solve_in_place, DenseMatrix, PIVOT_THRESHOLD};
pub use oracle::{mc_absorb_oracle, AbsorbingChain, LaneChainSampler, OracleEstimate, QueueChainSampler};
pub use quad::{integrate_segment, simpson};

/// `x^n` for small non-negative `n`.
#[inline]
pub(crate) fn ipow(x: f64, n: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Binomial coefficient as a float; zero when `k > n`.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
