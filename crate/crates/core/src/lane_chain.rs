//! Lane-based chain: every non-focal lane is labelled empty, lower or higher,
//! and lanes have their own arrival probabilities.
//!
//! The next user serviced is the highest bidder, whose lane is unknown among
//! the higher lanes; each higher lane is taken as the moving lane with
//! probability `1 / q̄`. Empty lanes and the moving lane are open and draw a
//! new label; every other lane keeps its label.
//!
//! The system over all non-terminal states has no level structure, so it is
//! solved in one dense step. Transition probabilities are polynomials in
//! `F(v)`; their coefficients are enumerated once per chain so that each
//! solve only evaluates and factorises.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::model::{IntersectionParams, LaneLabel, LaneState};
use crate::numerics::{ipow, solve_in_place, DenseMatrix};

/// All `3^(Q-1)` lane states, in code order.
pub fn lane_states(lanes: usize) -> Result<Vec<LaneState>> {
    if lanes < 2 {
        return Err(domain("an intersection needs at least two lanes"));
    }
    let n = lanes - 1;
    Ok((0..pow3(n)).map(|code| LaneState::from_code(code, n)).collect())
}

fn pow3(n: usize) -> usize {
    3usize.pow(n as u32)
}

/// Per-lane transition of an open lane.
fn open_lane_prob(p: f64, fv: f64, to: LaneLabel) -> f64 {
    match to {
        LaneLabel::Empty => 1.0 - p,
        LaneLabel::Lower => p * fv,
        LaneLabel::Higher => p * (1.0 - fv),
    }
}

/// One-period transition probability between lane states.
///
/// `lane_probs` holds the arrival probability of each non-focal lane, in the
/// same order as the state entries.
pub fn lane_transition_prob(from: &LaneState, to: &LaneState, lane_probs: &[f64], fv: f64) -> Result<f64> {
    if from.len() != lane_probs.len() || to.len() != lane_probs.len() {
        return Err(domain("state length must match the number of non-focal lanes"));
    }
    if lane_probs.iter().chain(core::iter::once(&fv)).any(|x| !(0.0..=1.0).contains(x)) {
        return Err(domain("probabilities must lie in [0, 1]"));
    }
    if from.is_terminal() {
        return Err(domain("terminal states have no outgoing transitions"));
    }
    let higher: Vec<usize> = lanes_with(from, LaneLabel::Higher).collect();
    let total: f64 = higher
        .iter()
        .map(|&moving| {
            from.entries()
                .iter()
                .zip(to.entries())
                .zip(lane_probs)
                .enumerate()
                .map(|(j, ((&cur, &next), &p))| {
                    if cur == LaneLabel::Empty || j == moving {
                        open_lane_prob(p, fv, next)
                    } else if cur == next {
                        1.0
                    } else {
                        0.0
                    }
                })
                .product::<f64>()
        })
        .sum();
    Ok(total / higher.len() as f64)
}

fn lanes_with(z: &LaneState, label: LaneLabel) -> impl Iterator<Item = usize> + '_ {
    z.entries().iter().enumerate().filter(move |(_, &l)| l == label).map(|(j, _)| j)
}

/// Expected waits for every lane state, indexed by state code.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneWaits {
    values: Vec<f64>,
}

impl LaneWaits {
    pub fn get(&self, z: &LaneState) -> Option<f64> {
        self.values.get(z.code()).copied()
    }

    pub fn by_code(&self, code: usize) -> Option<f64> {
        self.values.get(code).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// `coeff * F^lower * (1 - F)^higher` contribution to a matrix entry.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    col: usize,
    lower: u8,
    higher: u8,
    coeff: f64,
}

/// Prepared solver for one set of non-focal lane probabilities.
#[derive(Debug, Clone)]
pub struct LaneChain {
    lane_probs: Vec<f64>,
    step_cost: f64,
    /// Row index of every state code; `None` for terminal states.
    row_of: Vec<Option<usize>>,
    /// State code of every row.
    codes: Vec<usize>,
    /// Transition terms towards non-terminal states, grouped by row.
    terms: Vec<Vec<Term>>,
}

impl LaneChain {
    pub fn new(lane_probs: Vec<f64>, step_cost: f64) -> Result<Self> {
        if lane_probs.is_empty() {
            return Err(domain("an intersection needs at least two lanes"));
        }
        if lane_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(domain("arrival probabilities must lie in [0, 1]"));
        }
        if !(step_cost > 0.0 && step_cost.is_finite()) {
            return Err(domain("step cost must be positive"));
        }
        let n = lane_probs.len();
        let total = pow3(n);
        let mut row_of = alloc::vec![None; total];
        let mut codes = Vec::new();
        for (code, row) in row_of.iter_mut().enumerate() {
            if !LaneState::from_code(code, n).is_terminal() {
                *row = Some(codes.len());
                codes.push(code);
            }
        }
        let terms = codes.iter().map(|&code| row_terms(&LaneState::from_code(code, n), &lane_probs, &row_of)).collect();
        Ok(Self { lane_probs, step_cost, row_of, codes, terms })
    }

    pub fn from_params(params: &IntersectionParams, focal_lane: usize) -> Result<Self> {
        Self::new(params.lane_probs_for(focal_lane), params.step_cost)
    }

    pub fn lane_probs(&self) -> &[f64] {
        &self.lane_probs
    }

    /// Number of unknowns in the linear system.
    pub fn non_terminal_states(&self) -> usize {
        self.codes.len()
    }

    /// `I - P` restricted to the non-terminal states.
    pub fn system_matrix(&self, fv: f64) -> DenseMatrix {
        let n = self.codes.len();
        let mut a = DenseMatrix::identity(n);
        self.fill_transitions(&mut a, fv);
        a
    }

    fn fill_transitions(&self, a: &mut DenseMatrix, fv: f64) {
        let k = self.lane_probs.len();
        let pow_lower: Vec<f64> = (0..=k).map(|i| ipow(fv, i)).collect();
        let pow_higher: Vec<f64> = (0..=k).map(|i| ipow(1.0 - fv, i)).collect();
        for (row, terms) in self.terms.iter().enumerate() {
            for t in terms {
                a[(row, t.col)] -= t.coeff * pow_lower[t.lower as usize] * pow_higher[t.higher as usize];
            }
        }
    }

    /// Expected waits of every state at bid CDF value `fv`.
    pub fn solve(&self, fv: f64) -> Result<LaneWaits> {
        if !(0.0..=1.0).contains(&fv) {
            return Err(domain("bid CDF value must lie in [0, 1]"));
        }
        let mut a = self.system_matrix(fv);
        let mut x = alloc::vec![self.step_cost; self.codes.len()];
        solve_in_place(&mut a, &mut x)?;
        let mut values = alloc::vec![0.0; self.row_of.len()];
        for (row, &code) in self.codes.iter().enumerate() {
            values[code] = x[row];
        }
        Ok(LaneWaits { values })
    }

    pub fn wait(&self, fv: f64, z: &LaneState) -> Result<f64> {
        if z.len() != self.lane_probs.len() {
            return Err(domain("state length must match the number of non-focal lanes"));
        }
        if z.is_terminal() {
            return Ok(0.0);
        }
        Ok(self.solve(fv)?.get(z).unwrap_or(0.0))
    }
}

/// Enumerates the outcomes of every moving lane from state `z` and merges
/// them into polynomial terms per target state.
fn row_terms(z: &LaneState, probs: &[f64], row_of: &[Option<usize>]) -> Vec<Term> {
    let n = probs.len();
    let higher: Vec<usize> = lanes_with(z, LaneLabel::Higher).collect();
    let weight = 1.0 / higher.len() as f64;
    let mut terms: Vec<Term> = Vec::new();
    for &moving in &higher {
        let open: Vec<usize> = (0..n).filter(|&j| j == moving || z.entries()[j] == LaneLabel::Empty).collect();
        let mut target: Vec<LaneLabel> = z.entries().to_vec();
        for outcome in 0..pow3(open.len()) {
            let mut rest = outcome;
            let mut coeff = weight;
            let (mut lower, mut higher_new) = (0u8, 0u8);
            for &j in &open {
                let label = match rest % 3 {
                    0 => LaneLabel::Empty,
                    1 => LaneLabel::Lower,
                    _ => LaneLabel::Higher,
                };
                rest /= 3;
                target[j] = label;
                match label {
                    LaneLabel::Empty => coeff *= 1.0 - probs[j],
                    LaneLabel::Lower => {
                        coeff *= probs[j];
                        lower += 1;
                    }
                    LaneLabel::Higher => {
                        coeff *= probs[j];
                        higher_new += 1;
                    }
                }
            }
            if coeff == 0.0 {
                continue;
            }
            let code = target.iter().rev().fold(0, |acc, &l| acc * 3 + l as usize);
            let Some(col) = row_of[code] else { continue };
            match terms.iter_mut().find(|t| t.col == col && t.lower == lower && t.higher == higher_new) {
                Some(t) => t.coeff += coeff,
                None => terms.push(Term { col, lower, higher: higher_new, coeff }),
            }
        }
    }
    terms
}

/// Expected wait of a user bidding `v` from lane state `z`.
///
/// `lane_probs` is aligned with the entries of `z` (non-focal lanes in
/// ascending order).
pub fn lane_wait(v: f64, z: &LaneState, lane_probs: &[f64], params: &IntersectionParams) -> Result<f64> {
    let fv = params.dist.cdf(v)?;
    LaneChain::new(lane_probs.to_vec(), params.step_cost)?.wait(fv, z)
}
